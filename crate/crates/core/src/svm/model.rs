use std::fs;
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use super::gram::{DirectSource, DotGram, GramView, KernelSource};
use super::kernel::{KernelKind, KernelSpec};
use super::smo::{self, Solution, SolverOptions};
use super::{Coding, TrainConfig};
use crate::codec::{sha256_hex, RecordReader, RecordWriter};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg;

const MAGIC: &[u8; 8] = b"PRACHSVM";
const VERSION: u32 = 1;
const TRACE_EVERY: usize = 100;
/// Coefficients below this are treated as zero when collecting support vectors.
const ALPHA_EPS: f64 = 1e-12;

/// Per-feature z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &[f64], dim: usize) -> Self {
        let n = data.len() / dim;
        let mut mean = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);
        let mut var = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let denom = n.saturating_sub(1).max(1) as f64;
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / denom).sqrt();
                if sd > 0.0 { sd } else { 1.0 }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinaryReport {
    /// Training rows of this binary problem.
    pub rows: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Largest KKT violation left at exit.
    pub kkt_gap: f64,
    pub objective: f64,
    /// `(iteration, dual objective)` checkpoints; empty after loading from disk.
    pub objective_trace: Vec<(usize, f64)>,
}

impl From<&Solution> for BinaryReport {
    fn from(s: &Solution) -> Self {
        Self {
            rows: s.alpha.len(),
            iterations: s.iterations,
            converged: s.converged,
            kkt_gap: s.kkt_gap,
            objective: s.objective,
            objective_trace: s.objective_trace.clone(),
        }
    }
}

struct Problem {
    idx: Vec<usize>,
    y: Vec<f64>,
    c: Vec<f64>,
}

fn box_bounds(y: &[f64], cfg: &TrainConfig) -> Vec<f64> {
    if !cfg.class_weighting {
        return vec![cfg.c; y.len()];
    }
    let n = y.len() as f64;
    let pos = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let neg = n - pos;
    y.iter()
        .map(|&v| cfg.c * n / (2.0 * if v > 0.0 { pos } else { neg }))
        .collect()
}

fn solve_all(data: &[f64], dim: usize, problems: &[Problem], cfg: &TrainConfig) -> Vec<Solution> {
    let n = data.len() / dim;
    let budget = cfg.cache_mb.saturating_mul(1 << 20);
    let gram_bytes = DotGram::bytes_needed(n);
    let gram = (gram_bytes <= budget).then(|| DotGram::build(data, n, dim));
    let left = if gram.is_some() { budget - gram_bytes } else { budget };
    let per_thread = left / rayon::current_num_threads().min(problems.len()).max(1);
    problems
        .par_iter()
        .map(|p| {
            let m = p.idx.len();
            let opts = SolverOptions {
                kkt_tolerance: cfg.kkt_tolerance,
                max_iter: cfg.iteration_cap(m),
                working_set: cfg.working_set,
                cache_rows: (per_thread / (8 * m.max(1))).clamp(2, m.max(2)),
                trace_every: TRACE_EVERY,
            };
            let src: Box<dyn KernelSource> = match &gram {
                Some(g) => Box::new(GramView::new(g.clone(), cfg.kernel, p.idx.clone())),
                None => Box::new(DirectSource::new(data, dim, cfg.kernel, p.idx.clone())),
            };
            let s = smo::solve(src.as_ref(), &p.y, &p.c, &opts);
            if !s.converged {
                warn!(
                    "SMO stopped at the iteration cap {} with KKT gap {:.3e}",
                    opts.max_iter, s.kkt_gap
                );
            }
            s
        })
        .collect()
}

fn prepared(data: &[f64], dim: usize, standardize: bool) -> (Vec<f64>, Option<Standardizer>) {
    let mut x = data.to_vec();
    if !standardize {
        return (x, None);
    }
    let s = Standardizer::fit(data, dim);
    for row in x.chunks_exact_mut(dim) {
        s.apply(row);
    }
    (x, Some(s))
}

fn row_norms(pool: &[f64], dim: usize) -> Vec<f64> {
    pool.chunks_exact(dim).map(|r| linalg::dot(r, r)).collect()
}

/// Kernel values between `rows` (already scaled) and the pool, row-major.
fn kernel_block(kernel: &KernelSpec, rows: &[f64], pool: &[f64], pool_norms: &[f64], dim: usize) -> Vec<f64> {
    let m = rows.len() / dim;
    let p = pool_norms.len();
    let mut k = linalg::mul_transposed(rows, m, pool, p, dim);
    for (r, row) in rows.chunks_exact(dim).enumerate() {
        let nr = linalg::dot(row, row);
        for (v, &np) in k[r * p..(r + 1) * p].iter_mut().zip(pool_norms) {
            *v = kernel.from_dot(*v, nr, np);
        }
    }
    k
}

/// Single two-class machine with labels `+1` / `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvmModel {
    pub kernel: KernelSpec,
    pub c: f64,
    dim: usize,
    scaler: Option<Standardizer>,
    support_vectors: Vec<f64>,
    norms: Vec<f64>,
    /// `alpha_i y_i` for each support vector.
    coef: Vec<f64>,
    pub bias: f64,
    pub report: BinaryReport,
    /// Dual variables over the training rows.
    pub alpha: Vec<f64>,
}

pub fn train_binary(data: &[f64], dim: usize, y: &[f64], cfg: &TrainConfig) -> Result<BinarySvmModel> {
    cfg.validate()?;
    if dim == 0 || data.len() != dim * y.len() {
        return Err(Error::Shape { expected: dim * y.len(), got: data.len() });
    }
    if !y.iter().all(|&v| v == 1.0 || v == -1.0) {
        return Err(Error::Training("binary labels must be +1 or -1".into()));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::Training("both classes must be present".into()));
    }
    let (x, scaler) = prepared(data, dim, cfg.standardize);
    let problem = Problem { idx: (0..y.len()).collect(), y: y.to_vec(), c: box_bounds(y, cfg) };
    let sol = solve_all(&x, dim, std::slice::from_ref(&problem), cfg).pop().unwrap();
    let mut support_vectors = Vec::new();
    let mut coef = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > ALPHA_EPS {
            support_vectors.extend_from_slice(&x[i * dim..(i + 1) * dim]);
            coef.push(a * y[i]);
        }
    }
    Ok(BinarySvmModel {
        kernel: cfg.kernel,
        c: cfg.c,
        dim,
        scaler,
        norms: row_norms(&support_vectors, dim),
        support_vectors,
        coef,
        bias: sol.bias,
        report: BinaryReport::from(&sol),
        alpha: sol.alpha,
    })
}

impl BinarySvmModel {
    pub fn n_support(&self) -> usize {
        self.coef.len()
    }

    pub fn support_vector(&self, i: usize) -> &[f64] {
        &self.support_vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Shape { expected: self.dim, got: x.len() });
        }
        let mut row = x.to_vec();
        if let Some(s) = &self.scaler {
            s.apply(&mut row);
        }
        let k = kernel_block(&self.kernel, &row, &self.support_vectors, &self.norms, self.dim);
        Ok(linalg::dot(&k, &self.coef) + self.bias)
    }

    /// `+1` or `-1`; a zero decision value maps to `+1`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.decision(x)? >= 0.0 { 1.0 } else { -1.0 })
    }
}

/// One binary machine of a multi-class model.
#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    pub positive: usize,
    /// `None` for "all other classes".
    pub negative: Option<usize>,
    /// Indices into the shared support-vector pool.
    pub support: Vec<u32>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub report: BinaryReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiClassSvmModel {
    pub coding: Coding,
    pub kernel: KernelSpec,
    pub c: f64,
    dim: usize,
    classes: Vec<usize>,
    scaler: Option<Standardizer>,
    pool: Vec<f64>,
    pool_norms: Vec<f64>,
    machines: Vec<Machine>,
    /// Hash of the PCA model whose outputs this machine consumes.
    pub pca_hash: Option<String>,
    /// Hash of the PRACH configuration the training data came from.
    pub prach_hash: Option<String>,
}

pub fn train_multiclass(m: &FeatureMatrix, cfg: &TrainConfig) -> Result<MultiClassSvmModel> {
    cfg.validate()?;
    let classes = m.classes();
    if classes.len() < 2 {
        return Err(Error::Training(format!("need at least two classes, got {}", classes.len())));
    }
    let dim = m.dim();
    let labels = m.labels();
    let (x, scaler) = prepared(m.data(), dim, cfg.standardize);
    let mut problems = Vec::new();
    let mut pairs = Vec::new();
    match cfg.coding {
        Coding::Ova => {
            for &k in &classes {
                let y: Vec<f64> = labels.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
                let c = box_bounds(&y, cfg);
                problems.push(Problem { idx: (0..labels.len()).collect(), y, c });
                pairs.push((k, None));
            }
        }
        Coding::Ovo => {
            for (a_pos, &a) in classes.iter().enumerate() {
                for &b in &classes[a_pos + 1..] {
                    let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == a || labels[i] == b).collect();
                    let y: Vec<f64> = idx.iter().map(|&i| if labels[i] == a { 1.0 } else { -1.0 }).collect();
                    let c = box_bounds(&y, cfg);
                    problems.push(Problem { idx, y, c });
                    pairs.push((a, Some(b)));
                }
            }
        }
    }
    let solutions = solve_all(&x, dim, &problems, cfg);

    let mut pool_slot = vec![u32::MAX; labels.len()];
    for (p, s) in problems.iter().zip(&solutions) {
        for (&g, &a) in p.idx.iter().zip(&s.alpha) {
            if a > ALPHA_EPS {
                pool_slot[g] = 0;
            }
        }
    }
    let mut pool = Vec::new();
    let mut next = 0u32;
    for (g, slot) in pool_slot.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = next;
            next += 1;
            pool.extend_from_slice(&x[g * dim..(g + 1) * dim]);
        }
    }
    let machines = problems
        .iter()
        .zip(&solutions)
        .zip(pairs)
        .map(|((p, s), (positive, negative))| {
            let mut support = Vec::new();
            let mut coef = Vec::new();
            for (t, (&g, &a)) in p.idx.iter().zip(&s.alpha).enumerate() {
                if a > ALPHA_EPS {
                    support.push(pool_slot[g]);
                    coef.push(a * p.y[t]);
                }
            }
            Machine { positive, negative, support, coef, bias: s.bias, report: BinaryReport::from(s) }
        })
        .collect();
    Ok(MultiClassSvmModel {
        coding: cfg.coding,
        kernel: cfg.kernel,
        c: cfg.c,
        dim,
        classes,
        scaler,
        pool_norms: row_norms(&pool, dim),
        pool,
        machines,
        pca_hash: None,
        prach_hash: None,
    })
}

impl MultiClassSvmModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    pub fn pool_size(&self) -> usize {
        self.pool_norms.len()
    }

    pub fn all_converged(&self) -> bool {
        self.machines.iter().all(|m| m.report.converged)
    }

    /// Decision values, `rows x machines`, for row-major inputs.
    pub fn decision_matrix(&self, data: &[f64]) -> Result<Vec<f64>> {
        if data.len() % self.dim != 0 {
            return Err(Error::Shape { expected: self.dim, got: data.len() % self.dim });
        }
        let n = data.len() / self.dim;
        let p = self.pool_size().max(1);
        // Bound the kernel block to about 64 MB.
        let chunk = ((64usize << 20) / (8 * p)).max(1);
        let mut out = Vec::with_capacity(n * self.machines.len());
        for block in data.chunks(chunk * self.dim) {
            let mut rows = block.to_vec();
            if let Some(s) = &self.scaler {
                rows.chunks_exact_mut(self.dim).for_each(|r| s.apply(r));
            }
            let k = kernel_block(&self.kernel, &rows, &self.pool, &self.pool_norms, self.dim);
            for kr in k.chunks_exact(self.pool_size().max(1)).take(rows.len() / self.dim) {
                for mach in &self.machines {
                    let s: f64 = mach.support.iter().zip(&mach.coef).map(|(&j, &c)| c * kr[j as usize]).sum();
                    out.push(s + mach.bias);
                }
            }
            if self.pool_size() == 0 {
                for _ in 0..rows.len() / self.dim {
                    out.extend(self.machines.iter().map(|m| m.bias));
                }
            }
        }
        Ok(out)
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Shape { expected: self.dim, got: x.len() });
        }
        self.decision_matrix(x)
    }

    /// Class from one vector of decision values.
    ///
    /// One-vs-all takes the largest value. One-vs-one counts votes, breaks
    /// ties by the summed signed decision values, then by the lower label.
    pub fn decode(&self, dv: &[f64]) -> usize {
        match self.coding {
            Coding::Ova => {
                let mut best = 0;
                for (j, &v) in dv.iter().enumerate() {
                    if v > dv[best] {
                        best = j;
                    }
                }
                self.machines[best].positive
            }
            Coding::Ovo => {
                let pos = |c: usize| self.classes.binary_search(&c).unwrap();
                let mut votes = vec![0usize; self.classes.len()];
                let mut score = vec![0.0; self.classes.len()];
                for (m, &v) in self.machines.iter().zip(dv) {
                    let (a, b) = (pos(m.positive), pos(m.negative.unwrap()));
                    if v > 0.0 {
                        votes[a] += 1;
                    } else {
                        votes[b] += 1;
                    }
                    score[a] += v;
                    score[b] -= v;
                }
                let mut best = 0;
                for j in 1..votes.len() {
                    if votes[j] > votes[best] || (votes[j] == votes[best] && score[j] > score[best]) {
                        best = j;
                    }
                }
                self.classes[best]
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(self.decode(&self.decision_values(x)?))
    }

    pub fn predict_matrix(&self, data: &[f64]) -> Result<Vec<usize>> {
        let dv = self.decision_matrix(data)?;
        Ok(dv.chunks_exact(self.machines.len()).map(|r| self.decode(r)).collect())
    }

    /// One decision for several antenna rows of the same window: decision
    /// values are summed over the rows before decoding.
    pub fn predict_combined(&self, rows: &[&[f64]]) -> Result<usize> {
        let mut flat = Vec::with_capacity(rows.len() * self.dim);
        for r in rows {
            if r.len() != self.dim {
                return Err(Error::Shape { expected: self.dim, got: r.len() });
            }
            flat.extend_from_slice(r);
        }
        if rows.is_empty() {
            return Err(Error::Shape { expected: 1, got: 0 });
        }
        let dv = self.decision_matrix(&flat)?;
        let mut sum = vec![0.0; self.machines.len()];
        for r in dv.chunks_exact(self.machines.len()) {
            for (s, v) in sum.iter_mut().zip(r) {
                *s += v;
            }
        }
        Ok(self.decode(&sum))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = RecordWriter::new(MAGIC, VERSION);
        w.u8(match self.coding {
            Coding::Ova => 0,
            Coding::Ovo => 1,
        });
        let (tag, degree, gamma, alpha, offset) = match self.kernel.kind {
            KernelKind::Linear => (0, 0, 0.0, 0.0, 0.0),
            KernelKind::Polynomial { degree } => (1, degree, 0.0, 0.0, 0.0),
            KernelKind::Gaussian { gamma } => (2, 0, gamma, 0.0, 0.0),
            KernelKind::Sigmoid { alpha, offset } => (3, 0, 0.0, alpha, offset),
        };
        w.u8(tag);
        w.u32(degree);
        w.f64(gamma);
        w.f64(alpha);
        w.f64(offset);
        w.f64(self.kernel.scale);
        w.f64(self.c);
        w.u32(self.dim as u32);
        w.u32(self.classes.len() as u32);
        for &c in &self.classes {
            w.u32(c as u32);
        }
        match &self.scaler {
            Some(s) => {
                w.u8(1);
                w.f64s(&s.mean);
                w.f64s(&s.std);
            }
            None => w.u8(0),
        }
        w.u32(self.pool_size() as u32);
        w.f64s(&self.pool);
        w.u32(self.machines.len() as u32);
        for m in &self.machines {
            w.u32(m.positive as u32);
            w.u32(m.negative.map_or(u32::MAX, |v| v as u32));
            w.f64(m.bias);
            w.u8(m.report.converged as u8);
            w.u64(m.report.rows as u64);
            w.u64(m.report.iterations as u64);
            w.f64(m.report.kkt_gap);
            w.f64(m.report.objective);
            w.u32(m.support.len() as u32);
            for &s in &m.support {
                w.u32(s);
            }
            w.f64s(&m.coef);
        }
        w.str(self.pca_hash.as_deref().unwrap_or(""));
        w.str(self.prach_hash.as_deref().unwrap_or(""));
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = RecordReader::open(bytes, MAGIC, VERSION)?;
        let coding = match r.u8()? {
            0 => Coding::Ova,
            1 => Coding::Ovo,
            t => return Err(Error::format(format!("unknown coding tag {t}"))),
        };
        let tag = r.u8()?;
        let degree = r.u32()?;
        let gamma = r.f64()?;
        let alpha = r.f64()?;
        let offset = r.f64()?;
        let scale = r.f64()?;
        let kind = match tag {
            0 => KernelKind::Linear,
            1 => KernelKind::Polynomial { degree },
            2 => KernelKind::Gaussian { gamma },
            3 => KernelKind::Sigmoid { alpha, offset },
            t => return Err(Error::format(format!("unknown kernel tag {t}"))),
        };
        let kernel = KernelSpec { kind, scale };
        let c = r.f64()?;
        let dim = r.u32()? as usize;
        let n_classes = r.u32()? as usize;
        let classes = (0..n_classes).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let scaler = match r.u8()? {
            0 => None,
            1 => Some(Standardizer { mean: r.f64s(dim)?, std: r.f64s(dim)? }),
            t => return Err(Error::format(format!("bad scaler flag {t}"))),
        };
        let pool_size = r.u32()? as usize;
        let pool = r.f64s(pool_size * dim)?;
        let n_machines = r.u32()? as usize;
        let mut machines = Vec::with_capacity(n_machines);
        for _ in 0..n_machines {
            let positive = r.u32()? as usize;
            let negative = match r.u32()? {
                u32::MAX => None,
                v => Some(v as usize),
            };
            let bias = r.f64()?;
            let converged = r.u8()? != 0;
            let rows = r.u64()? as usize;
            let iterations = r.u64()? as usize;
            let kkt_gap = r.f64()?;
            let objective = r.f64()?;
            let n_sv = r.u32()? as usize;
            let support = (0..n_sv).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            if let Some(&bad) = support.iter().find(|&&s| s as usize >= pool_size) {
                return Err(Error::format(format!("support index {bad} outside pool of {pool_size}")));
            }
            let coef = r.f64s(n_sv)?;
            machines.push(Machine {
                positive,
                negative,
                support,
                coef,
                bias,
                report: BinaryReport { rows, iterations, converged, kkt_gap, objective, objective_trace: Vec::new() },
            });
        }
        let opt = |s: String| if s.is_empty() { None } else { Some(s) };
        let pca_hash = opt(r.str()?);
        let prach_hash = opt(r.str()?);
        r.finish()?;
        Ok(Self {
            coding,
            kernel,
            c,
            dim,
            classes,
            scaler,
            pool_norms: row_norms(&pool, dim),
            pool,
            machines,
            pca_hash,
            prach_hash,
        })
    }

    pub fn hash(&self) -> String {
        sha256_hex(&self.to_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
