use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svm::{Coding, KernelSpec, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamKind {
    ContinuousLog { low: f64, high: f64 },
    ContinuousLinear { low: f64, high: f64 },
    Categorical { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    #[serde(flatten)]
    pub kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Choice(String),
}

impl Value {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(*v),
            Value::Choice(_) => None,
        }
    }

    pub fn as_choice(&self) -> Option<&str> {
        match self {
            Value::Choice(s) => Some(s),
            Value::Real(_) => None,
        }
    }
}

/// Parameter assignment keyed by name.
pub type Point = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    params: Vec<Param>,
}

const BOUND_SLACK: f64 = 1e-12;

impl SearchSpace {
    pub fn new(params: Vec<Param>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::config("search space has no parameters"));
        }
        for (i, p) in params.iter().enumerate() {
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::config(format!("duplicate parameter {}", p.name)));
            }
            match &p.kind {
                ParamKind::ContinuousLog { low, high } => {
                    if !(low.is_finite() && high.is_finite() && *low > 0.0 && low < high) {
                        return Err(Error::config(format!("{}: log bounds need 0 < low < high", p.name)));
                    }
                }
                ParamKind::ContinuousLinear { low, high } => {
                    if !(low.is_finite() && high.is_finite() && low < high) {
                        return Err(Error::config(format!("{}: bounds need low < high", p.name)));
                    }
                }
                ParamKind::Categorical { choices } => {
                    if choices.is_empty() {
                        return Err(Error::config(format!("{}: no choices", p.name)));
                    }
                }
            }
        }
        Ok(Self { params })
    }

    /// C, kernel, kernel scale, multi-class coding and standardization.
    pub fn svm_default() -> Self {
        let cat = |name: &str, c: &[&str]| Param {
            name: name.into(),
            kind: ParamKind::Categorical { choices: c.iter().map(|s| s.to_string()).collect() },
        };
        let log = |name: &str| Param { name: name.into(), kind: ParamKind::ContinuousLog { low: 1e-3, high: 1e3 } };
        Self::new(vec![
            log("C"),
            cat("kernel", &["linear", "quadratic", "gaussian", "sigmoid"]),
            log("scale"),
            cat("coding", &["ova", "ovo"]),
            cat("standardize", &["no", "yes"]),
        ])
        .expect("default space is valid")
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn encoded_dim(&self) -> usize {
        self.params
            .iter()
            .map(|p| match &p.kind {
                ParamKind::Categorical { choices } => choices.len(),
                _ => 1,
            })
            .sum()
    }

    /// Continuous parameters to `[0, 1]` (log scale where declared), categoricals one-hot.
    pub fn encode(&self, point: &Point) -> Result<Vec<f64>> {
        if point.len() != self.params.len() {
            return Err(Error::config(format!("point has {} entries, space has {}", point.len(), self.params.len())));
        }
        let mut out = Vec::with_capacity(self.encoded_dim());
        for p in &self.params {
            let v = point.get(&p.name).ok_or_else(|| Error::config(format!("point lacks {}", p.name)))?;
            let bad = || Error::config(format!("{} = {v:?} is outside the space", p.name));
            match &p.kind {
                ParamKind::ContinuousLog { low, high } | ParamKind::ContinuousLinear { low, high } => {
                    let x = v.as_real().ok_or_else(bad)?;
                    let u = if matches!(p.kind, ParamKind::ContinuousLog { .. }) {
                        if x <= 0.0 {
                            return Err(bad());
                        }
                        (x.ln() - low.ln()) / (high.ln() - low.ln())
                    } else {
                        (x - low) / (high - low)
                    };
                    if !(-BOUND_SLACK..=1.0 + BOUND_SLACK).contains(&u) {
                        return Err(bad());
                    }
                    out.push(u.clamp(0.0, 1.0));
                }
                ParamKind::Categorical { choices } => {
                    let s = v.as_choice().ok_or_else(bad)?;
                    let k = choices.iter().position(|c| c == s).ok_or_else(bad)?;
                    out.extend((0..choices.len()).map(|j| if j == k { 1.0 } else { 0.0 }));
                }
            }
        }
        Ok(out)
    }

    fn value_at(p: &Param, u: f64) -> Value {
        match &p.kind {
            ParamKind::ContinuousLog { low, high } => Value::Real((low.ln() + u * (high.ln() - low.ln())).exp()),
            ParamKind::ContinuousLinear { low, high } => Value::Real(low + u * (high - low)),
            ParamKind::Categorical { choices } => {
                Value::Choice(choices[((u * choices.len() as f64) as usize).min(choices.len() - 1)].clone())
            }
        }
    }

    /// Uniform draw (log-uniform for log parameters).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        self.params.iter().map(|p| (p.name.clone(), Self::value_at(p, rng.random::<f64>()))).collect()
    }

    /// `n` points, one in each of `n` equal strata per parameter.
    pub fn latin_hypercube<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        let mut points = vec![Point::new(); n];
        for p in &self.params {
            let mut strata: Vec<usize> = (0..n).collect();
            strata.shuffle(rng);
            for (pt, s) in points.iter_mut().zip(strata) {
                let u = (s as f64 + rng.random::<f64>()) / n as f64;
                pt.insert(p.name.clone(), Self::value_at(p, u));
            }
        }
        points
    }
}

/// Overlay a point from [`SearchSpace::svm_default`] on `base`.
///
/// The kernel scale divides inner products and squared distances; the
/// gaussian kernel uses `gamma = 1` and the sigmoid `tanh(x.z / s^2)`.
pub fn svm_config_from_point(base: &TrainConfig, point: &Point) -> Result<TrainConfig> {
    let real = |k: &str| {
        point.get(k).and_then(Value::as_real).ok_or_else(|| Error::config(format!("point lacks real {k}")))
    };
    let choice = |k: &str| {
        point.get(k).and_then(Value::as_choice).ok_or_else(|| Error::config(format!("point lacks choice {k}")))
    };
    let scale = real("scale")?;
    let kernel = match choice("kernel")? {
        "linear" => KernelSpec::linear(scale),
        "quadratic" => KernelSpec::quadratic(scale),
        "gaussian" => KernelSpec::gaussian(1.0, scale),
        "sigmoid" => KernelSpec::sigmoid(1.0, 0.0, scale),
        k => return Err(Error::config(format!("unknown kernel {k}"))),
    };
    let coding = match choice("coding")? {
        "ova" => Coding::Ova,
        "ovo" => Coding::Ovo,
        c => return Err(Error::config(format!("unknown coding {c}"))),
    };
    let standardize = match choice("standardize")? {
        "no" => false,
        "yes" => true,
        s => return Err(Error::config(format!("unknown standardize value {s}"))),
    };
    Ok(TrainConfig { c: real("C")?, kernel, coding, standardize, ..base.clone() })
}
