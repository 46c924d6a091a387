use rand::Rng;
use rayon::prelude::*;

use crate::channel::{simulate_window, ChannelProfile};
use crate::detector::{compute_pdp, detect, DetectorConfig};
use crate::error::{Error, Result};
use crate::metrics::{reference_snr, DetectionStats, SweepRecord, WindowOutcome, DEFAULT_MDR_TARGET};
use crate::pipeline::Pipeline;
use crate::seed;
use crate::zc::{PrachConfig, PreambleSet};

pub const ANALYTICAL: &str = "analytical";
pub const SVM: &str = "svm";
/// SVM scored on noise-only windows; it always fires there.
pub const SVM_NOISE_ONLY: &str = "svm-noise-only";

/// One channel of a sweep; `detector` is `None` to skip the analytical path.
#[derive(Debug, Clone)]
pub struct SweepChannel {
    pub profile: ChannelProfile,
    pub detector: Option<DetectorConfig>,
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub prach: PrachConfig,
    pub channels: Vec<SweepChannel>,
    pub snr_db: Vec<f64>,
    pub windows_per_point: usize,
    pub n_antennas: usize,
    pub ta_us: f64,
    pub noise_only_fraction: f64,
    pub seed: u64,
}

impl SweepPlan {
    pub fn window_seed(&self, channel: &str, snr_db: f64, w: usize) -> u64 {
        seed::derive(self.seed, &[seed::tag(channel), snr_db.to_bits(), w as u64])
    }

    /// Truth of window `w`: noise-only with probability `noise_only_fraction`,
    /// otherwise a uniform preamble index.
    pub fn truth(&self, window_seed: u64) -> Option<usize> {
        let mut rng = seed::rng(seed::derive(window_seed, &[0]));
        let noise = rng.random::<f64>() < self.noise_only_fraction;
        let v = rng.random_range(0..self.prach.n_preambles);
        (!noise).then_some(v)
    }
}

#[derive(Default, Clone, Copy)]
struct Cell {
    analytical: DetectionStats,
    svm: DetectionStats,
    svm_noise: DetectionStats,
}

fn run_cell(plan: &SweepPlan, set: &PreambleSet, ch: &SweepChannel, snr: f64, svm: Option<&Pipeline>) -> Result<Cell> {
    let mut cell = Cell::default();
    for w in 0..plan.windows_per_point {
        let ws = plan.window_seed(ch.profile.name(), snr, w);
        let truth = plan.truth(ws);
        let window = simulate_window(set, &ch.profile, truth, plan.ta_us, snr, plan.n_antennas, ws)?;
        if let Some(cfg) = &ch.detector {
            let found = detect(&compute_pdp(&window, set)?, cfg).indices();
            cell.analytical.score(&WindowOutcome { truth, detections: found });
        }
        if let Some(p) = svm {
            let label = p.predict_window(&window)?;
            let outcome = WindowOutcome { truth, detections: vec![label] };
            match truth {
                Some(_) => cell.svm.score(&outcome),
                None => cell.svm_noise.score(&outcome),
            }
        }
    }
    Ok(cell)
}

/// Paired sweep: both detectors score the same received windows.
///
/// Records are ordered by channel, then detector, then SNR. The SVM is scored
/// on preamble windows under [`SVM`] and on noise-only windows under
/// [`SVM_NOISE_ONLY`]; empty curves are omitted.
pub fn run_sweep(plan: &SweepPlan, svm: Option<&Pipeline>) -> Result<Vec<SweepRecord>> {
    if plan.snr_db.is_empty() || plan.windows_per_point == 0 {
        return Err(Error::config("sweep needs SNR points and windows"));
    }
    let set = PreambleSet::new(plan.prach)?;
    let cells: Vec<(usize, usize)> =
        (0..plan.channels.len()).flat_map(|c| (0..plan.snr_db.len()).map(move |s| (c, s))).collect();
    let results = cells
        .par_iter()
        .map(|&(c, s)| run_cell(plan, &set, &plan.channels[c], plan.snr_db[s], svm))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for (c, ch) in plan.channels.iter().enumerate() {
        let row = &results[c * plan.snr_db.len()..(c + 1) * plan.snr_db.len()];
        let curves: [(&str, fn(&Cell) -> DetectionStats); 3] =
            [(ANALYTICAL, |x| x.analytical), (SVM, |x| x.svm), (SVM_NOISE_ONLY, |x| x.svm_noise)];
        for (name, pick) in curves {
            if row.iter().all(|cell| pick(cell).window_count == 0) {
                continue;
            }
            for (cell, &snr) in row.iter().zip(&plan.snr_db) {
                records.push(SweepRecord {
                    snr_db: snr,
                    detector: name.to_string(),
                    channel: ch.profile.name().to_string(),
                    stats: pick(cell),
                });
            }
        }
    }
    Ok(records)
}

/// `(snr, mdr)` curve of one detector on one channel, sorted by SNR.
pub fn mdr_curve(records: &[SweepRecord], detector: &str, channel: &str) -> Vec<(f64, Option<f64>)> {
    select(records, detector, channel, |s| s.mdr())
}

pub fn far_curve(records: &[SweepRecord], detector: &str, channel: &str) -> Vec<(f64, Option<f64>)> {
    select(records, detector, channel, |s| s.far())
}

fn select(
    records: &[SweepRecord],
    detector: &str,
    channel: &str,
    f: impl Fn(&DetectionStats) -> Option<f64>,
) -> Vec<(f64, Option<f64>)> {
    let mut v: Vec<_> = records
        .iter()
        .filter(|r| r.detector == detector && r.channel == channel)
        .map(|r| (r.snr_db, f(&r.stats)))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Measured MDR reference SNR of one curve at the 1% target.
pub fn measured_reference_snr(records: &[SweepRecord], detector: &str, channel: &str) -> Option<f64> {
    reference_snr(&mdr_curve(records, detector, channel), DEFAULT_MDR_TARGET)
}

/// Number of grid steps where a curve increases.
pub fn monotonicity_violations(curve: &[(f64, Option<f64>)]) -> usize {
    let vals: Vec<f64> = curve.iter().filter_map(|&(_, m)| m).collect();
    vals.windows(2).filter(|w| w[1] > w[0]).count()
}
