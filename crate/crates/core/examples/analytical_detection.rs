//! Calibrate the correlation detector to a 0.1% false-alarm rate and detect
//! preambles in noisy AWGN windows.
//!
//! ```text
//! cargo run --release --example analytical_detection
//! ```

use prach_lab::channel::{simulate_window, ChannelProfile};
use prach_lab::detector::{calibrate_threshold, compute_pdp, detect, DetectorConfig};
use prach_lab::metrics::{DetectionStats, WindowOutcome};
use prach_lab::zc::{PrachConfig, PreambleSet};

fn main() -> prach_lab::Result<()> {
    let prach = PrachConfig::default();
    let set = PreambleSet::new(prach)?;
    let awgn = ChannelProfile::awgn();

    let template = DetectorConfig::new(&prach, 2.0);
    let rec = calibrate_threshold(&prach, &awgn, 1e-3, 20_000, &template, 1, 11)?;
    println!(
        "threshold factor {:.2} (empirical FAR {:.4} on {} noise windows)",
        rec.threshold_factor, rec.empirical_far, rec.windows
    );
    let cfg = DetectorConfig::new(&prach, rec.threshold_factor);

    // A noiseless window: one detection, delay equal to the timing advance.
    let ta_us = 5.0 * prach.sample_period_us();
    let w = simulate_window(&set, &awgn, Some(42), ta_us, f64::INFINITY, 1, 0)?;
    let d = detect(&compute_pdp(&w, &set)?, &cfg);
    println!("noiseless preamble 42: {:?}", d.detections);

    for snr in [-20.0, -16.0, -12.0, -8.0] {
        let mut stats = DetectionStats::default();
        for i in 0..400u64 {
            let truth = (i % 2 == 0).then_some((i as usize / 2) % prach.n_preambles);
            let w = simulate_window(&set, &awgn, truth, 2.0, snr, 1, 1000 + i)?;
            let found = detect(&compute_pdp(&w, &set)?, &cfg).indices();
            stats.score(&WindowOutcome { truth, detections: found });
        }
        println!(
            "SNR {snr:>5.1} dB: MDR {:.3}, FAR {:.4}",
            stats.mdr().unwrap_or(f64::NAN),
            stats.far().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
