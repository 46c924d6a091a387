//! Gaussian-process regression with a Matern-5/2 ARD kernel.
//!
//! Targets are standardized before fitting. Hyperparameters
//! `theta = [ln l_1 .. ln l_D, ln sigma_f, ln sigma_n]` maximize the log
//! marginal likelihood by Adam ascent with analytic gradients.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

const SQRT5: f64 = 2.236_067_977_499_79;
const LN_LENGTH: (f64, f64) = (-4.6, 4.6);
const LN_SIGNAL: (f64, f64) = (-3.0, 3.0);
const LN_NOISE: (f64, f64) = (-9.2, 0.0);
const ADAM_STEPS: usize = 150;
const ADAM_RATE: f64 = 0.05;
const RESTARTS: usize = 3;
const JITTER: f64 = 1e-10;

fn matern(r: f64) -> f64 {
    (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * (-SQRT5 * r).exp()
}

fn scaled_sq(a: &[f64], b: &[f64], inv_l2: &[f64]) -> f64 {
    a.iter().zip(b).zip(inv_l2).map(|((x, y), w)| (x - y) * (x - y) * w).sum()
}

fn clamp_theta(theta: &mut [f64]) {
    let d = theta.len() - 2;
    for t in &mut theta[..d] {
        *t = t.clamp(LN_LENGTH.0, LN_LENGTH.1);
    }
    theta[d] = theta[d].clamp(LN_SIGNAL.0, LN_SIGNAL.1);
    theta[d + 1] = theta[d + 1].clamp(LN_NOISE.0, LN_NOISE.1);
}

/// Log marginal likelihood and its gradient in `theta`.
pub(crate) fn lml_and_grad(x: &[Vec<f64>], y: &[f64], theta: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = x.len();
    let d = theta.len() - 2;
    let inv_l2: Vec<f64> = theta[..d].iter().map(|t| (-2.0 * t).exp()).collect();
    let sf2 = (2.0 * theta[d]).exp();
    let sn2 = (2.0 * theta[d + 1]).exp();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = sf2 * matern(scaled_sq(&x[i], &x[j], &inv_l2).sqrt());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += sn2 + JITTER;
    }
    let chol = Cholesky::new(k)?;
    let yv = DVector::from_column_slice(y);
    let alpha = chol.solve(&yv);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    let lml = -0.5 * yv.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    // W = alpha alpha^T - K^{-1}; dLML/dtheta = 1/2 tr(W dK).
    let w = &alpha * alpha.transpose() - chol.inverse();
    let mut grad = vec![0.0; d + 2];
    for i in 0..n {
        for j in 0..n {
            let r2 = scaled_sq(&x[i], &x[j], &inv_l2);
            let r = r2.sqrt();
            let e = (-SQRT5 * r).exp();
            let wij = w[(i, j)];
            let common = sf2 * 5.0 / 3.0 * (1.0 + SQRT5 * r) * e;
            for (q, g) in grad[..d].iter_mut().enumerate() {
                let diff = x[i][q] - x[j][q];
                *g += 0.5 * wij * common * diff * diff * inv_l2[q];
            }
            grad[d] += 0.5 * wij * 2.0 * sf2 * (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * e;
        }
        grad[d + 1] += 0.5 * w[(i, i)] * 2.0 * sn2;
    }
    lml.is_finite().then_some((lml, grad))
}

fn adam(x: &[Vec<f64>], y: &[f64], mut theta: Vec<f64>) -> Option<(f64, Vec<f64>)> {
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for t in 1..=ADAM_STEPS {
        let (lml, g) = lml_and_grad(x, y, &theta)?;
        if best.as_ref().is_none_or(|b| lml > b.0) {
            best = Some((lml, theta.clone()));
        }
        for i in 0..theta.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let mh = m[i] / (1.0 - b1.powi(t as i32));
            let vh = v[i] / (1.0 - b2.powi(t as i32));
            theta[i] += ADAM_RATE * mh / (vh.sqrt() + eps);
        }
        clamp_theta(&mut theta);
    }
    if let Some((lml, _)) = lml_and_grad(x, y, &theta) {
        if best.as_ref().is_none_or(|b| lml > b.0) {
            best = Some((lml, theta));
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct GpSurrogate {
    x: Vec<Vec<f64>>,
    y_mean: f64,
    y_std: f64,
    theta: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    lml: f64,
}

impl GpSurrogate {
    pub fn fit(x: &[Vec<f64>], y: &[f64], seed_value: u64) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Shape { expected: y.len().max(1), got: x.len() });
        }
        let d = x[0].len();
        if x.iter().any(|r| r.len() != d) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("inconsistent or non-finite GP inputs"));
        }
        let n = y.len() as f64;
        let y_mean = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n).sqrt();
        let y_std = if sd > 1e-12 { sd } else { 1.0 };
        let yn: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_std).collect();

        let mut rng = seed::rng(seed_value);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for r in 0..RESTARTS {
            let mut theta: Vec<f64> = if r == 0 {
                let mut t = vec![(0.3f64).ln(); d];
                t.extend([0.0, (0.1f64).ln()]);
                t
            } else {
                let mut t: Vec<f64> = (0..d).map(|_| rng.random_range(-2.5..1.0)).collect();
                t.extend([rng.random_range(-1.0..1.0), rng.random_range(-6.0..-1.0)]);
                t
            };
            clamp_theta(&mut theta);
            if let Some(cand) = adam(x, &yn, theta) {
                if best.as_ref().is_none_or(|b| cand.0 > b.0) {
                    best = Some(cand);
                }
            }
        }
        let (lml, theta) = best.ok_or_else(|| Error::Training("GP likelihood could not be evaluated".into()))?;
        Self::with_theta(x, y, y_mean, y_std, theta, lml)
    }

    fn with_theta(x: &[Vec<f64>], y: &[f64], y_mean: f64, y_std: f64, theta: Vec<f64>, lml: f64) -> Result<Self> {
        let n = x.len();
        let k = Self::cov(&theta, x);
        let mut km = k;
        for i in 0..n {
            km[(i, i)] += (2.0 * theta[theta.len() - 1]).exp() + JITTER;
        }
        let chol = Cholesky::new(km).ok_or_else(|| Error::Training("GP covariance is not positive definite".into()))?;
        let yn = DVector::from_iterator(n, y.iter().map(|v| (v - y_mean) / y_std));
        let alpha = chol.solve(&yn);
        Ok(Self { x: x.to_vec(), y_mean, y_std, theta, chol, alpha, lml })
    }

    fn inv_l2(theta: &[f64]) -> Vec<f64> {
        theta[..theta.len() - 2].iter().map(|t| (-2.0 * t).exp()).collect()
    }

    fn signal_var(theta: &[f64]) -> f64 {
        (2.0 * theta[theta.len() - 2]).exp()
    }

    fn cov(theta: &[f64], x: &[Vec<f64>]) -> DMatrix<f64> {
        let inv = Self::inv_l2(theta);
        let sf2 = Self::signal_var(theta);
        DMatrix::from_fn(x.len(), x.len(), |i, j| sf2 * matern(scaled_sq(&x[i], &x[j], &inv).sqrt()))
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    pub fn lengthscales(&self) -> Vec<f64> {
        self.theta[..self.theta.len() - 2].iter().map(|t| t.exp()).collect()
    }

    /// Observation noise variance in target units.
    pub fn noise_variance(&self) -> f64 {
        (2.0 * self.theta[self.theta.len() - 1]).exp() * self.y_std * self.y_std
    }

    /// Posterior mean and latent variance (non-negative) in target units.
    pub fn predict(&self, q: &[f64]) -> (f64, f64) {
        let inv = Self::inv_l2(&self.theta);
        let sf2 = Self::signal_var(&self.theta);
        let ks = DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| sf2 * matern(scaled_sq(xi, q, &inv).sqrt())));
        let mean = ks.dot(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&ks).expect("triangular solve");
        let var = (sf2 - v.dot(&v)).max(0.0);
        (self.y_mean + self.y_std * mean, var * self.y_std * self.y_std)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64 / 8.0, ((i * 3) % 9) as f64 / 8.0]).collect();
        let y = x.iter().map(|p| (3.0 * p[0]).sin() + 0.5 * p[1] * p[1]).collect();
        (x, y)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = toy();
        let theta = vec![-0.7, 0.2, 0.3, -2.0];
        let (_, g) = lml_and_grad(&x, &y, &theta).unwrap();
        for i in 0..theta.len() {
            let h = 1e-6;
            let mut tp = theta.clone();
            tp[i] += h;
            let mut tm = theta.clone();
            tm[i] -= h;
            let fd = (lml_and_grad(&x, &y, &tp).unwrap().0 - lml_and_grad(&x, &y, &tm).unwrap().0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-5 * fd.abs().max(1.0), "component {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn fit_improves_likelihood_and_interpolates() {
        let (x, y) = toy();
        let gp = GpSurrogate::fit(&x, &y, 1).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
        let yn: Vec<f64> = y.iter().map(|v| (v - mean) / sd).collect();
        let init = [0.3f64.ln(), 0.3f64.ln(), 0.0, 0.1f64.ln()];
        assert!(gp.log_marginal_likelihood() >= lml_and_grad(&x, &yn, &init).unwrap().0);
        let sd_noise = gp.noise_variance().sqrt();
        for (xi, &yi) in x.iter().zip(&y) {
            let (m, v) = gp.predict(xi);
            assert!(v >= 0.0);
            assert!((m - yi).abs() <= sd_noise.max(1e-3) * 3.0, "mean {m} vs {yi}");
        }
        let far = gp.predict(&[5.0, 5.0]);
        assert!(far.1 > gp.predict(&x[0]).1);
    }

    #[test]
    fn constant_targets_are_handled() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
        let gp = GpSurrogate::fit(&x, &[0.5; 5], 0).unwrap();
        let (m, v) = gp.predict(&[0.3]);
        assert!((m - 0.5).abs() < 1e-9);
        assert!(v >= 0.0);
    }
}
