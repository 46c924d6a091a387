//! PCA followed by a multi-class SVM, trained and applied as one unit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ReceivedWindow;
use crate::error::{Error, Result};
use crate::features::{fit_pca, vectorize, FeatureMatrix, PcaModel};
use crate::svm::{cross_validate_with, train_multiclass, CvOutcome, MultiClassSvmModel, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Explained-variance fraction kept by PCA.
    pub variance_target: f64,
    pub svm: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { variance_target: 0.95, svm: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub pca: PcaModel,
    pub svm: MultiClassSvmModel,
}

impl Pipeline {
    pub fn fit(raw: &FeatureMatrix, cfg: &PipelineConfig) -> Result<Self> {
        let pca = fit_pca(raw, cfg.variance_target)?;
        let reduced = pca.project_matrix(raw)?;
        let mut svm = train_multiclass(&reduced, &cfg.svm)?;
        svm.pca_hash = Some(pca.hash());
        Ok(Self { pca, svm })
    }

    /// Join models trained separately; the SVM must name this PCA.
    pub fn from_parts(pca: PcaModel, svm: MultiClassSvmModel) -> Result<Self> {
        let h = pca.hash();
        if svm.pca_hash.as_deref() != Some(h.as_str()) {
            return Err(Error::config("SVM model was trained on a different PCA model"));
        }
        if svm.dim() != pca.k() {
            return Err(Error::Shape { expected: pca.k(), got: svm.dim() });
        }
        Ok(Self { pca, svm })
    }

    pub fn predict_matrix(&self, raw: &FeatureMatrix) -> Result<Vec<usize>> {
        let reduced = self.pca.project_matrix(raw)?;
        self.svm.predict_matrix(reduced.data())
    }

    /// One class per window; antenna decision values are summed.
    pub fn predict_window(&self, window: &ReceivedWindow) -> Result<usize> {
        let n_zc = self.pca.dim / 2;
        let rows = window
            .per_antenna
            .iter()
            .map(|s| self.pca.project(&vectorize(s, n_zc)?))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        self.svm.predict_combined(&refs)
    }

    pub fn save(&self, pca_path: &Path, svm_path: &Path) -> Result<()> {
        self.pca.save(pca_path)?;
        self.svm.save(svm_path)
    }

    pub fn load(pca_path: &Path, svm_path: &Path) -> Result<Self> {
        Self::from_parts(PcaModel::load(pca_path)?, MultiClassSvmModel::load(svm_path)?)
    }
}

/// Cross-validation that refits PCA inside every training fold.
pub fn cross_validate_pipeline(raw: &FeatureMatrix, cfg: &PipelineConfig, n_folds: usize, seed: u64) -> Result<CvOutcome> {
    cross_validate_with(raw, n_folds, seed, |train, test| Pipeline::fit(train, cfg)?.predict_matrix(test))
}
