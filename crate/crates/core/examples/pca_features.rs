//! Vectorize received windows and reduce them with PCA.
//!
//! ```text
//! cargo run --release --example pca_features
//! ```

use prach_lab::channel::ProfileLibrary;
use prach_lab::dataset::{generate_matrix, GenConfig};
use prach_lab::features::{fit_pca, unvectorize, vectorize};
use prach_lab::zc::{PrachConfig, PreambleSet};

fn main() -> prach_lab::Result<()> {
    let prach = PrachConfig { n_preambles: 16, ..PrachConfig::default() };

    // Real parts first, then imaginary parts.
    let set = PreambleSet::new(prach)?;
    let v = vectorize(set.get(3)?, prach.n_zc)?;
    println!("feature length {}, round trip exact: {}", v.len(), unvectorize(&v)? == *set.get(3)?);

    let gen = GenConfig {
        prach,
        channels: vec!["AWGN".into()],
        snr_db: vec![-10.0, 0.0, 10.0],
        windows_per_point: 8,
        n_antennas: 2,
        ta_us: 2.0,
        seed: 1,
    };
    let m = generate_matrix(&gen, &ProfileLibrary::new(None))?.matrix;
    println!("{} rows of dimension {}", m.len(), m.dim());

    // One fit at a high target; smaller targets just cut the cumulative curve.
    let pca = fit_pca(&m, 0.99)?;
    println!("leading variances {:.3?}, rank {}", &pca.variances[..3], pca.rank);
    for target in [0.5, 0.8, 0.95, 0.99] {
        let k = pca.cumvar.iter().position(|&c| c >= target).unwrap() + 1;
        println!("target {target:.2}: k = {k:>3}, explained {:.4}", pca.cumvar[k - 1]);
    }

    let x = m.row(0);
    let back = pca.reconstruct(&pca.project(x)?)?;
    let err: f64 = x.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    println!("row 0 relative reconstruction error {:.3}", err / norm);
    Ok(())
}
