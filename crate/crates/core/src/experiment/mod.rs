//! Batch experiments: configuration, the six commands behind the CLI and the
//! paired detector sweep.
//!
//! Every command reads an [`ExperimentConfig`] and works inside its output
//! directory:
//!
//! | command     | reads                          | writes                                              |
//! |-------------|--------------------------------|-----------------------------------------------------|
//! | `generate`  |                                | `train.ds`                                          |
//! | `train`     | `train.ds`                     | `pca.bin`, `svm.bin`, `confusion.csv`, `train.json` |
//! | `tune`      | `train.ds`                     | `trials.jsonl`, `incumbent.csv`, `tune.json`, `tuned/` |
//! | `calibrate` |                                | `thresholds.json`                                   |
//! | `sweep`     | models, `thresholds.json`      | `sweep_<detector>.csv`, `sweep.json`                |
//! | `report`    | `sweep.json`, `train.json`     | `report.csv`                                        |
//!
//! Outputs carry the config hash and no timestamps, so a rerun with the same
//! config and seed reproduces them byte for byte.

mod commands;
mod config;
pub mod reference;
mod sweep;

pub use commands::*;
pub use config::{
    CostModel, DetectorKind, DetectorSection, EvalSection, ExperimentConfig, SnrGrid, TrainSection, TuneSection,
};
pub use sweep::{
    far_curve, mdr_curve, measured_reference_snr, monotonicity_violations, run_sweep, SweepChannel, SweepPlan,
    ANALYTICAL, SVM, SVM_NOISE_ONLY,
};
