//! Sequential minimal optimization for the C-SVM dual
//!
//! ```text
//! min_a  1/2 a^T Q a - e^T a,   Q_ij = y_i y_j K(x_i, x_j)
//! s.t.   y^T a = 0,  0 <= a_i <= C_i
//! ```
//!
//! Each step updates the pair that most violates the KKT conditions and
//! keeps the gradient `G = Q a - e` up to date.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::gram::KernelSource;

const TAU: f64 = 1e-12;

/// Pair selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkingSet {
    /// First-order: the maximal violating pair.
    #[default]
    MaxViolatingPair,
    /// Second-order choice of the partner index.
    SecondOrder,
}

#[derive(Debug, Clone)]
pub(crate) struct SolverOptions {
    pub kkt_tolerance: f64,
    pub max_iter: usize,
    pub working_set: WorkingSet,
    /// Kernel rows kept in the LRU cache.
    pub cache_rows: usize,
    /// Record the dual objective every this many iterations.
    pub trace_every: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `max_{I_up} -y G - min_{I_low} -y G` at exit.
    pub kkt_gap: f64,
    /// Dual objective `e^T a - 1/2 a^T Q a`.
    pub objective: f64,
    pub objective_trace: Vec<(usize, f64)>,
}

struct RowCache<'a> {
    src: &'a dyn KernelSource,
    cap: usize,
    rows: HashMap<usize, (Arc<Vec<f64>>, u64)>,
    clock: u64,
}

impl<'a> RowCache<'a> {
    fn new(src: &'a dyn KernelSource, cap: usize) -> Self {
        Self { src, cap: cap.max(2), rows: HashMap::new(), clock: 0 }
    }

    fn get(&mut self, i: usize) -> Arc<Vec<f64>> {
        self.clock += 1;
        if let Some(entry) = self.rows.get_mut(&i) {
            entry.1 = self.clock;
            return entry.0.clone();
        }
        if self.rows.len() >= self.cap {
            let oldest = self.rows.iter().min_by_key(|(_, (_, t))| *t).map(|(&k, _)| k);
            if let Some(k) = oldest {
                self.rows.remove(&k);
            }
        }
        let mut row = vec![0.0; self.src.len()];
        self.src.row(i, &mut row);
        let row = Arc::new(row);
        self.rows.insert(i, (row.clone(), self.clock));
        row
    }
}

fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (1.0 - g)).sum::<f64>()
}

pub(crate) fn solve(src: &dyn KernelSource, y: &[f64], c: &[f64], opts: &SolverOptions) -> Solution {
    let n = src.len();
    assert_eq!(y.len(), n);
    assert_eq!(c.len(), n);
    let diag: Vec<f64> = (0..n).map(|i| src.diag(i)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut cache = RowCache::new(src, opts.cache_rows);
    let mut trace = vec![(0, 0.0)];
    let trace_every = opts.trace_every.max(1);

    let in_up = |a: f64, yi: f64, ci: f64| if yi > 0.0 { a < ci } else { a > 0.0 };
    let in_low = |a: f64, yi: f64, ci: f64| if yi > 0.0 { a > 0.0 } else { a < ci };

    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    while iterations < opts.max_iter {
        // i maximizes -y G over I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t], c[t]) {
                let v = -y[t] * grad[t];
                if v >= gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        // y G maximum over I_low, i.e. -(min -y G).
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let row_i = if i_sel == usize::MAX { None } else { Some(cache.get(i_sel)) };
        match opts.working_set {
            WorkingSet::MaxViolatingPair => {
                for t in 0..n {
                    if in_low(alpha[t], y[t], c[t]) {
                        let v = y[t] * grad[t];
                        if v >= gmax2 {
                            gmax2 = v;
                            j_sel = t;
                        }
                    }
                }
            }
            WorkingSet::SecondOrder => {
                let mut obj_min = f64::INFINITY;
                if let Some(ki) = &row_i {
                    for t in 0..n {
                        if in_low(alpha[t], y[t], c[t]) {
                            let v = y[t] * grad[t];
                            gmax2 = gmax2.max(v);
                            let diff = gmax + v;
                            if diff > 0.0 {
                                let quad = (diag[i_sel] + diag[t] - 2.0 * ki[t]).max(TAU);
                                let obj = -diff * diff / quad;
                                if obj <= obj_min {
                                    obj_min = obj;
                                    j_sel = t;
                                }
                            }
                        }
                    }
                }
            }
        }
        gap = gmax + gmax2;
        if i_sel == usize::MAX || j_sel == usize::MAX || gap < opts.kkt_tolerance {
            converged = true;
            break;
        }
        let (i, j) = (i_sel, j_sel);
        let ki = row_i.expect("row for selected index");
        let kj = cache.get(j);
        let qij = y[i] * y[j] * ki[j];
        let (ci, cj) = (c[i], c[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let quad = (diag[i] + diag[j] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (diag[i] + diag[j] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
        iterations += 1;
        if iterations % trace_every == 0 {
            trace.push((iterations, dual_objective(&alpha, &grad)));
        }
    }

    let objective = dual_objective(&alpha, &grad);
    if trace.last().map(|t| t.0) != Some(iterations) {
        trace.push((iterations, objective));
    }
    Solution {
        bias: -rho(&alpha, &grad, y, c),
        alpha,
        iterations,
        converged,
        kkt_gap: gap,
        objective,
        objective_trace: trace,
    }
}

/// Offset from free vectors, or the middle of the feasible interval.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}
