//! Bayesian optimization with a GP surrogate and expected improvement per
//! second.
//!
//! The first [`N_BOOTSTRAP`] suggestions come from a Latin hypercube. After
//! that one GP models the objective and a second models log runtime, and the
//! best of [`N_CANDIDATES`] random candidates by `EI(x) / E[runtime(x)]` is
//! returned. When the incumbent has not improved for [`STAGNATION_WINDOW`]
//! trials the noise term in the acquisition is multiplied by
//! [`STAGNATION_NOISE_BOOST`] to push exploration.

pub mod benchmarks;
mod gp;
mod space;

pub use gp::GpSurrogate;
pub use space::{svm_config_from_point, Param, ParamKind, Point, SearchSpace, Value};

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::seed;

pub const N_BOOTSTRAP: usize = 4;
pub const N_CANDIDATES: usize = 2048;
pub const STAGNATION_WINDOW: usize = 5;
pub const STAGNATION_NOISE_BOOST: f64 = 4.0;
const MIN_RUNTIME: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub iteration: usize,
    pub point: Point,
    pub objective: f64,
    pub runtime_s: f64,
    pub seed: u64,
    /// The evaluation failed and `objective` was set to 1.
    pub failed: bool,
}

/// Objective value with an optional self-reported cost in seconds; without
/// one the wall-clock time of the call is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub runtime_s: Option<f64>,
}

impl From<f64> for Evaluation {
    fn from(objective: f64) -> Self {
        Self { objective, runtime_s: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best_point: Point,
    pub best_objective: f64,
    pub history: Vec<Trial>,
    /// Best objective after each trial.
    pub incumbent_curve: Vec<f64>,
}

impl OptResult {
    fn from_history(history: Vec<Trial>) -> Result<Self> {
        let mut curve = Vec::with_capacity(history.len());
        let mut best: Option<&Trial> = None;
        for t in &history {
            if best.is_none_or(|b| t.objective < b.objective) {
                best = Some(t);
            }
            curve.push(best.unwrap().objective);
        }
        let b = best.ok_or_else(|| Error::config("no trials were run"))?;
        Ok(Self { best_point: b.point.clone(), best_objective: b.objective, incumbent_curve: curve, history: history.clone() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptConfig {
    pub n_iter: usize,
    pub seed: u64,
    /// JSON-lines trial log, one record per completed trial.
    pub log_path: Option<PathBuf>,
    /// Continue from the trials already in the log instead of starting over.
    pub resume: bool,
}

impl OptConfig {
    pub fn new(n_iter: usize, seed: u64) -> Self {
        Self { n_iter, seed, log_path: None, resume: false }
    }
}

fn expected_improvement(best: f64, mean: f64, sd: f64) -> f64 {
    if sd <= 0.0 {
        return (best - mean).max(0.0);
    }
    let n = Normal::standard();
    let z = (best - mean) / sd;
    (best - mean) * n.cdf(z) + sd * n.pdf(z)
}

/// Trials since the incumbent last improved.
fn stagnation(history: &[Trial]) -> usize {
    let mut best = f64::INFINITY;
    let mut since = 0;
    for t in history {
        if t.objective < best {
            best = t.objective;
            since = 0;
        } else {
            since += 1;
        }
    }
    since
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Next point to evaluate given the history so far.
pub fn suggest(history: &[Trial], space: &SearchSpace, seed_value: u64) -> Result<Point> {
    let i = history.len();
    if i < N_BOOTSTRAP {
        let mut rng = seed::rng(seed::derive(seed_value, &[seed::tag("bootstrap")]));
        return Ok(space.latin_hypercube(N_BOOTSTRAP, &mut rng).swap_remove(i));
    }
    let mut rng = seed::rng(seed::derive(seed_value, &[seed::tag("suggest"), i as u64]));
    let candidates: Vec<Point> = (0..N_CANDIDATES).map(|_| space.sample(&mut rng)).collect();
    let enc = candidates.iter().map(|c| space.encode(c)).collect::<Result<Vec<_>>>()?;
    let x = history.iter().map(|t| space.encode(&t.point)).collect::<Result<Vec<_>>>()?;
    let y: Vec<f64> = history.iter().map(|t| t.objective).collect();
    let fit_seed = seed::derive(seed_value, &[seed::tag("gp"), i as u64]);
    let gp = match GpSurrogate::fit(&x, &y, fit_seed) {
        Ok(g) => g,
        Err(e) => {
            warn!("objective GP fit failed ({e}); using a random suggestion");
            return Ok(candidates.into_iter().next().unwrap());
        }
    };
    let log_rt: Vec<f64> = history.iter().map(|t| t.runtime_s.max(MIN_RUNTIME).ln()).collect();
    let rt_gp = GpSurrogate::fit(&x, &log_rt, seed::derive(fit_seed, &[1]))
        .map_err(|e| warn!("runtime GP fit failed ({e}); assuming uniform cost"))
        .ok();

    let pred: Vec<(f64, f64)> = enc.iter().map(|e| gp.predict(e)).collect();
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let explore = || -> Point {
        let var: Vec<f64> = pred.iter().map(|p| p.1).collect();
        candidates[argmax(&var)].clone()
    };
    if hi - lo <= 1e-12 {
        return Ok(explore());
    }
    let boost = if stagnation(history) >= STAGNATION_WINDOW { STAGNATION_NOISE_BOOST } else { 1.0 };
    let noise = boost * gp.noise_variance();
    let ei: Vec<f64> = pred.iter().map(|&(m, v)| expected_improvement(lo, m, (v + noise).sqrt())).collect();
    let max_ei = ei.iter().cloned().fold(0.0, f64::max);
    if !(max_ei > 1e-12 * (hi - lo)) {
        return Ok(explore());
    }
    let score: Vec<f64> = ei
        .iter()
        .zip(&enc)
        .map(|(&a, e)| match &rt_gp {
            Some(r) => {
                let (m, v) = r.predict(e);
                a / (m + 0.5 * v).exp()
            }
            None => a,
        })
        .collect();
    Ok(candidates[argmax(&score)].clone())
}

pub fn read_trial_log(path: &Path, space: &SearchSpace) -> Result<Vec<Trial>> {
    let mut trials: Vec<Trial> = Vec::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Trial = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if t.iteration != trials.len() {
            return Err(Error::Parse(format!("{}:{}: trial {} out of order", path.display(), n + 1, t.iteration)));
        }
        space.encode(&t.point)?;
        trials.push(t);
    }
    Ok(trials)
}

fn evaluate<F>(objective: &mut F, point: &Point, iteration: usize, seed_value: u64) -> Trial
where
    F: FnMut(&Point, u64) -> Result<Evaluation>,
{
    let tseed = seed::derive(seed_value, &[seed::tag("trial"), iteration as u64]);
    let start = Instant::now();
    let outcome = objective(point, tseed);
    let wall = start.elapsed().as_secs_f64();
    let (objective, runtime_s, failed) = match outcome {
        Ok(e) if e.objective.is_finite() => (e.objective, e.runtime_s.unwrap_or(wall), false),
        Ok(e) => {
            warn!("trial {iteration} returned {}; recorded as 1.0", e.objective);
            (1.0, wall, true)
        }
        Err(err) => {
            warn!("trial {iteration} failed: {err}; recorded as 1.0");
            (1.0, wall, true)
        }
    };
    Trial { iteration, point: point.clone(), objective, runtime_s: runtime_s.max(MIN_RUNTIME), seed: tseed, failed }
}

fn drive<F, S>(mut objective: F, space: &SearchSpace, cfg: &OptConfig, mut next: S) -> Result<OptResult>
where
    F: FnMut(&Point, u64) -> Result<Evaluation>,
    S: FnMut(&[Trial]) -> Result<Point>,
{
    if cfg.n_iter == 0 {
        return Err(Error::config("n_iter must be positive"));
    }
    let mut history = match (&cfg.log_path, cfg.resume) {
        (Some(p), true) if p.exists() => read_trial_log(p, space)?,
        _ => Vec::new(),
    };
    history.truncate(cfg.n_iter);
    let mut log = match &cfg.log_path {
        Some(p) => {
            if !cfg.resume || !p.exists() {
                fs::write(p, "")?;
            }
            Some(OpenOptions::new().append(true).open(p)?)
        }
        None => None,
    };
    while history.len() < cfg.n_iter {
        let point = next(&history)?;
        let trial = evaluate(&mut objective, &point, history.len(), cfg.seed);
        if let Some(f) = log.as_mut() {
            writeln!(f, "{}", serde_json::to_string(&trial)?)?;
            f.flush()?;
        }
        history.push(trial);
    }
    OptResult::from_history(history)
}

/// Sequential Bayesian optimization of `objective` over `space`.
pub fn run_optimization<F>(objective: F, space: &SearchSpace, cfg: &OptConfig) -> Result<OptResult>
where
    F: FnMut(&Point, u64) -> Result<Evaluation>,
{
    drive(objective, space, cfg, |h| suggest(h, space, cfg.seed))
}

/// Uniform random search with the same bookkeeping, as a baseline.
pub fn random_search<F>(objective: F, space: &SearchSpace, cfg: &OptConfig) -> Result<OptResult>
where
    F: FnMut(&Point, u64) -> Result<Evaluation>,
{
    drive(objective, space, cfg, |h| {
        let mut rng = seed::rng(seed::derive(cfg.seed, &[seed::tag("random"), h.len() as u64]));
        Ok(space.sample(&mut rng))
    })
}

/// `iteration,objective,incumbent` rows.
pub fn incumbent_csv(result: &OptResult) -> String {
    let mut s = String::from("iteration,objective,incumbent\n");
    for (t, inc) in result.history.iter().zip(&result.incumbent_curve) {
        s.push_str(&format!("{},{:.6},{:.6}\n", t.iteration, t.objective, inc));
    }
    s
}
