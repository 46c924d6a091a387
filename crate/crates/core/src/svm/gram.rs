//! Kernel rows for the solver: either from a precomputed dot-product Gram
//! matrix or computed on demand from the feature rows.

use std::sync::Arc;

use super::kernel::KernelSpec;
use crate::linalg;

pub(crate) trait KernelSource: Sync {
    fn len(&self) -> usize;
    fn diag(&self, i: usize) -> f64;
    /// `out[t] = K(x_i, x_t)` for every local index `t`.
    fn row(&self, i: usize, out: &mut [f64]);
}

/// Full `n x n` matrix of inner products, shared between binary problems.
#[derive(Debug)]
pub(crate) struct DotGram {
    n: usize,
    dots: Vec<f64>,
}

impl DotGram {
    pub fn bytes_needed(n: usize) -> usize {
        n.saturating_mul(n).saturating_mul(8)
    }

    pub fn build(data: &[f64], n: usize, dim: usize) -> Arc<Self> {
        let dots = linalg::mul_transposed(data, n, data, n, dim);
        Arc::new(Self { n, dots })
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.dots[i * self.n + j]
    }
}

/// Kernel over a subset of Gram rows.
pub(crate) struct GramView {
    gram: Arc<DotGram>,
    kernel: KernelSpec,
    idx: Vec<usize>,
}

impl GramView {
    pub fn new(gram: Arc<DotGram>, kernel: KernelSpec, idx: Vec<usize>) -> Self {
        Self { gram, kernel, idx }
    }
}

impl KernelSource for GramView {
    fn len(&self) -> usize {
        self.idx.len()
    }

    fn diag(&self, i: usize) -> f64 {
        let g = self.idx[i];
        let d = self.gram.get(g, g);
        self.kernel.from_dot(d, d, d)
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        let gi = self.idx[i];
        let base = &self.gram.dots[gi * self.gram.n..(gi + 1) * self.gram.n];
        let ni = base[gi];
        for (o, &gt) in out.iter_mut().zip(&self.idx) {
            *o = self.kernel.from_dot(base[gt], ni, self.gram.get(gt, gt));
        }
    }
}

/// Kernel rows computed from features each time they are requested.
pub(crate) struct DirectSource<'a> {
    data: &'a [f64],
    dim: usize,
    kernel: KernelSpec,
    idx: Vec<usize>,
    norms: Vec<f64>,
}

impl<'a> DirectSource<'a> {
    pub fn new(data: &'a [f64], dim: usize, kernel: KernelSpec, idx: Vec<usize>) -> Self {
        let norms = idx
            .iter()
            .map(|&g| {
                let r = &data[g * dim..(g + 1) * dim];
                linalg::dot(r, r)
            })
            .collect();
        Self { data, dim, kernel, idx, norms }
    }

    fn global_row(&self, g: usize) -> &[f64] {
        &self.data[g * self.dim..(g + 1) * self.dim]
    }
}

impl KernelSource for DirectSource<'_> {
    fn len(&self) -> usize {
        self.idx.len()
    }

    fn diag(&self, i: usize) -> f64 {
        let n = self.norms[i];
        self.kernel.from_dot(n, n, n)
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        let xi = self.global_row(self.idx[i]);
        let ni = self.norms[i];
        for (t, o) in out.iter_mut().enumerate() {
            let d = linalg::dot(xi, self.global_row(self.idx[t]));
            *o = self.kernel.from_dot(d, ni, self.norms[t]);
        }
    }
}
