//! Kernel support vector machines trained with SMO.
//!
//! Binary machines are combined one-vs-all or one-vs-one. All machines of a
//! multi-class model share one pool of support vectors and, when it fits in
//! the cache budget, one precomputed inner-product matrix.

mod cv;
mod gram;
mod kernel;
mod model;
mod smo;

pub use cv::{cross_validate, cross_validate_with, CvOutcome};
pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use model::{
    train_binary, train_multiclass, BinaryReport, BinarySvmModel, Machine, MultiClassSvmModel, Standardizer,
};
pub use smo::WorkingSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coding {
    /// One machine per class against the rest.
    #[default]
    Ova,
    /// One machine per class pair, majority vote.
    Ovo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Box constraint.
    pub c: f64,
    pub kernel: KernelSpec,
    pub coding: Coding,
    /// Z-score each input feature with training statistics.
    pub standardize: bool,
    /// Scale `C` per class by `n / (2 n_class)` in each binary problem.
    pub class_weighting: bool,
    pub kkt_tolerance: f64,
    /// Iteration cap per binary problem; `None` picks one from the size.
    pub max_iter: Option<usize>,
    pub working_set: WorkingSet,
    /// Memory for the inner-product matrix and kernel row caches.
    pub cache_mb: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 0.09,
            kernel: KernelSpec::quadratic(1.0),
            coding: Coding::Ova,
            standardize: false,
            class_weighting: false,
            kkt_tolerance: 1e-3,
            max_iter: None,
            working_set: WorkingSet::MaxViolatingPair,
            cache_mb: 1536,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config(format!("C = {} must be positive", self.c)));
        }
        if !(self.kkt_tolerance > 0.0) {
            return Err(Error::config("KKT tolerance must be positive"));
        }
        self.kernel.validate()
    }

    pub(crate) fn iteration_cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| (200 * n).max(100_000))
    }
}
