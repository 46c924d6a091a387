//! Train binary and multi-class kernel SVMs with SMO.
//!
//! ```text
//! cargo run --release --example svm_training
//! ```

use prach_lab::features::FeatureMatrix;
use prach_lab::svm::{cross_validate, train_binary, train_multiclass, Coding, KernelSpec, TrainConfig};

fn main() -> prach_lab::Result<()> {
    // XOR: not linearly separable, separable with a quadratic kernel.
    let x = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0];
    let y = [1.0, 1.0, -1.0, -1.0];
    let cfg = TrainConfig { c: 10.0, kernel: KernelSpec::quadratic(1.0), ..TrainConfig::default() };
    let m = train_binary(&x, 2, &y, &cfg)?;
    println!(
        "XOR: {} support vectors, {} iterations, KKT gap {:.1e}",
        m.n_support(),
        m.report.iterations,
        m.report.kkt_gap
    );
    for p in x.chunks(2) {
        println!("  f({:>4}, {:>4}) = {:+.3}", p[0], p[1], m.decision(p)?);
    }

    // Four Gaussian blobs in 2-D, one per class.
    let centres = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (4.0, 4.0)];
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rng = prach_lab::seed::rng(3);
    for i in 0..200 {
        let (cx, cy) = centres[i % 4];
        let (dx, dy): (f64, f64) = (rand::Rng::random(&mut rng), rand::Rng::random(&mut rng));
        data.extend([cx + 2.0 * dx - 1.0, cy + 2.0 * dy - 1.0]);
        labels.push(i % 4);
    }
    let blobs = FeatureMatrix::from_labeled(2, data, labels)?;
    for coding in [Coding::Ova, Coding::Ovo] {
        let cfg = TrainConfig { c: 1.0, kernel: KernelSpec::gaussian(1.0, 1.0), coding, ..TrainConfig::default() };
        let model = train_multiclass(&blobs, &cfg)?;
        let cv = cross_validate(&blobs, &cfg, 5, 0)?;
        println!(
            "{coding:?}: {} machines, {} pooled SVs, predict(3.9, 0.2) = {}, 5-fold error {:.3}",
            model.machines().len(),
            model.pool_size(),
            model.predict(&[3.9, 0.2])?,
            cv.mean_error
        );
    }
    Ok(())
}
