//! PRACH preamble detection laboratory.
//!
//! Generates Zadoff-Chu preambles for long format 0, passes them through
//! tapped-delay-line channels in the sequence domain and compares two
//! detectors on false-alarm and miss-detection rate versus SNR:
//!
//! * [`detector`]: cyclic correlation against the root, one peak per
//!   zero-correlation zone, threshold relative to the noise floor.
//! * [`svm`]: real/imaginary feature vectors, PCA ([`features`]) and a
//!   multi-class kernel SVM trained with SMO, tuned by [`hyperopt`].
//!
//! The runnable programs under `examples/` walk through each piece.

pub mod channel;
mod codec;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod features;
pub mod hyperopt;
mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod svm;
pub mod zc;

pub use error::{Error, Result};
