use rayon::prelude::*;

use super::{train_multiclass, TrainConfig};
use crate::dataset::stratified_kfold;
use crate::error::Result;
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    /// Misclassification rate over all out-of-fold predictions.
    pub mean_error: f64,
    pub fold_errors: Vec<f64>,
    /// Out-of-fold prediction for every row.
    pub predictions: Vec<usize>,
}

/// Stratified `k`-fold estimate with a caller-supplied fit-and-predict step.
/// Rows with the same `RowMeta::seed` share a fold.
pub fn cross_validate_with<F>(m: &FeatureMatrix, n_folds: usize, seed: u64, fit_predict: F) -> Result<CvOutcome>
where
    F: Fn(&FeatureMatrix, &FeatureMatrix) -> Result<Vec<usize>> + Sync,
{
    let groups: Vec<u64> = m.meta().iter().map(|r| r.seed).collect();
    let folds = stratified_kfold(m.labels(), &groups, n_folds, seed)?;
    let per_fold = folds
        .par_iter()
        .map(|test| {
            let mut in_test = vec![false; m.len()];
            test.iter().for_each(|&i| in_test[i] = true);
            let train: Vec<usize> = (0..m.len()).filter(|&i| !in_test[i]).collect();
            fit_predict(&m.subset(&train), &m.subset(test))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut predictions = vec![0; m.len()];
    let mut fold_errors = Vec::with_capacity(folds.len());
    let mut wrong = 0usize;
    for (test, pred) in folds.iter().zip(per_fold) {
        let mut w = 0;
        for (&i, p) in test.iter().zip(pred) {
            predictions[i] = p;
            if p != m.labels()[i] {
                w += 1;
            }
        }
        wrong += w;
        fold_errors.push(w as f64 / test.len() as f64);
    }
    Ok(CvOutcome { mean_error: wrong as f64 / m.len() as f64, fold_errors, predictions })
}

/// Cross-validated error of a multi-class SVM on fixed features.
pub fn cross_validate(m: &FeatureMatrix, cfg: &TrainConfig, n_folds: usize, seed: u64) -> Result<CvOutcome> {
    cross_validate_with(m, n_folds, seed, |train, test| {
        train_multiclass(train, cfg)?.predict_matrix(test.data())
    })
}
