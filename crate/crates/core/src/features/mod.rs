//! Feature vectors from received windows and PCA dimensionality reduction.
//!
//! A complex window of `N` samples becomes `2N` reals laid out as all real
//! parts followed by all imaginary parts ([`Layout::Blocked`]).

mod pca;

pub use pca::{fit_pca, PcaModel};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::zc::ComplexSequence;

/// Arrangement of real and imaginary parts inside a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `[Re s0 .. Re s(N-1), Im s0 .. Im s(N-1)]`.
    Blocked,
}

impl Layout {
    pub fn tag(self) -> u8 {
        match self {
            Layout::Blocked => 0,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Layout::Blocked),
            t => Err(Error::format(format!("unknown layout tag {t}"))),
        }
    }
}

pub fn vectorize(signal: &ComplexSequence, n_zc: usize) -> Result<Vec<f64>> {
    if signal.len() != n_zc {
        return Err(Error::Shape {
            expected: n_zc,
            got: signal.len(),
        });
    }
    let s = signal.samples();
    Ok(s.iter().map(|z| z.re).chain(s.iter().map(|z| z.im)).collect())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(features: &[f64]) -> Result<ComplexSequence> {
    if features.len() % 2 != 0 {
        return Err(Error::Shape {
            expected: features.len() + 1,
            got: features.len(),
        });
    }
    let (re, im) = features.split_at(features.len() / 2);
    Ok(ComplexSequence::new(
        re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect(),
    ))
}

/// Per-row provenance carried next to the features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowMeta {
    pub snr_db: f64,
    /// Index into [`FeatureMatrix::channels`].
    pub channel: u16,
    pub antenna: u8,
    /// Window seed, shared by the antenna rows of one window.
    pub seed: u64,
}

/// Row-major feature matrix with labels and metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    dim: usize,
    data: Vec<f64>,
    labels: Vec<usize>,
    meta: Vec<RowMeta>,
    pub channels: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Default::default()
        }
    }

    pub fn from_rows(dim: usize, data: Vec<f64>, labels: Vec<usize>, meta: Vec<RowMeta>) -> Result<Self> {
        if dim == 0 || data.len() != dim * labels.len() || meta.len() != labels.len() {
            return Err(Error::Shape {
                expected: dim * labels.len(),
                got: data.len(),
            });
        }
        Ok(Self {
            dim,
            data,
            labels,
            meta,
            channels: Vec::new(),
        })
    }

    /// Labels only; every row gets its own seed and zeroed metadata otherwise.
    pub fn from_labeled(dim: usize, data: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        let meta = (0..labels.len())
            .map(|i| RowMeta {
                snr_db: 0.0,
                channel: 0,
                antenna: 0,
                seed: i as u64,
            })
            .collect();
        Self::from_rows(dim, data, labels, meta)
    }

    pub fn push(&mut self, features: &[f64], label: usize, meta: RowMeta) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: features.len(),
            });
        }
        self.data.extend_from_slice(features);
        self.labels.push(label);
        self.meta.push(meta);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn meta(&self) -> &[RowMeta] {
        &self.meta
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<usize> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            dim: self.dim,
            data,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            meta: idx.iter().map(|&i| self.meta[i]).collect(),
            channels: self.channels.clone(),
        }
    }

    /// Same rows and labels with replaced features of a new width.
    pub fn with_features(&self, dim: usize, data: Vec<f64>) -> Result<Self> {
        let mut m = Self::from_rows(dim, data, self.labels.clone(), self.meta.clone())?;
        m.channels = self.channels.clone();
        Ok(m)
    }
}
