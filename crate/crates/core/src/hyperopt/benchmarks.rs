//! Synthetic objectives with known minima.

use super::space::{Param, ParamKind, Point, SearchSpace};

fn unit(name: &str) -> Param {
    Param { name: name.into(), kind: ParamKind::ContinuousLinear { low: 0.0, high: 1.0 } }
}

/// `x` in `[0, 1]`.
pub fn quadratic_space() -> SearchSpace {
    SearchSpace::new(vec![unit("x")]).unwrap()
}

/// `(x - 0.3)^2`, minimum 0 at `x = 0.3`.
pub fn quadratic_1d(p: &Point) -> f64 {
    let x = p["x"].as_real().expect("x");
    (x - 0.3) * (x - 0.3)
}

pub const QUADRATIC_ARGMIN: f64 = 0.3;

/// `u`, `v` in `[0, 1]`.
pub fn branin_space() -> SearchSpace {
    SearchSpace::new(vec![unit("u"), unit("v")]).unwrap()
}

/// Branin function on `x1 = 15u - 5`, `x2 = 15v`; minimum about 0.397887.
pub fn branin(p: &Point) -> f64 {
    use std::f64::consts::PI;
    let x1 = 15.0 * p["u"].as_real().expect("u") - 5.0;
    let x2 = 15.0 * p["v"].as_real().expect("v");
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

pub const BRANIN_MIN: f64 = 0.397_887_357_729_738;
