//! One-step correlation detector: power delay profile, per-zone peak search
//! against a threshold proportional to the noise floor, and Monte-Carlo
//! threshold calibration on noise-only windows.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{realize, transmit, ChannelProfile, ReceivedWindow, TxScenario};
use crate::error::{Error, Result};
use crate::seed;
use crate::zc::{cyclic_correlate, PrachConfig, PreambleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFloor {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub threshold_factor: f64,
    pub n_cs: usize,
    pub n_preambles: usize,
    pub noise_floor: NoiseFloor,
}

impl DetectorConfig {
    pub fn new(prach: &PrachConfig, threshold_factor: f64) -> Self {
        Self {
            threshold_factor,
            n_cs: prach.n_cs,
            n_preambles: prach.n_preambles,
            noise_floor: NoiseFloor::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_factor > 1.0 && self.threshold_factor.is_finite()) {
            return Err(Error::config(format!(
                "threshold factor {} must exceed 1",
                self.threshold_factor
            )));
        }
        if self.n_cs == 0 || self.n_preambles == 0 {
            return Err(Error::config("detector zones must be non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub bins: Vec<f64>,
    pub root_u: usize,
}

impl PowerDelayProfile {
    pub fn noise_floor(&self, estimator: NoiseFloor) -> f64 {
        if self.bins.is_empty() {
            return 0.0;
        }
        match estimator {
            NoiseFloor::Mean => self.bins.iter().sum::<f64>() / self.bins.len() as f64,
            NoiseFloor::Median => {
                let mut v = self.bins.clone();
                v.sort_by(f64::total_cmp);
                let m = v.len() / 2;
                if v.len() % 2 == 1 {
                    v[m]
                } else {
                    0.5 * (v[m - 1] + v[m])
                }
            }
        }
    }

    /// Largest bin of each zone `[v*n_cs, (v+1)*n_cs)`, as `(index, power)`.
    fn zone_peaks(&self, n_cs: usize, n_preambles: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..n_preambles).filter_map(move |v| {
            let lo = v * n_cs;
            let hi = ((v + 1) * n_cs).min(self.bins.len());
            (lo..hi).fold(None, |best: Option<(usize, f64)>, i| match best {
                Some((_, p)) if p >= self.bins[i] => best,
                _ => Some((i, self.bins[i])),
            })
        })
    }

    /// Largest zone peak over the noise floor; the window fires iff this exceeds the factor.
    pub fn peak_to_floor(&self, cfg: &DetectorConfig) -> f64 {
        let floor = self.noise_floor(cfg.noise_floor);
        if floor <= 0.0 {
            return 0.0;
        }
        self.zone_peaks(cfg.n_cs, cfg.n_preambles)
            .map(|(_, p)| p / floor)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub preamble: usize,
    pub peak_power: f64,
    pub delay_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionResult {
    pub detections: Vec<Detection>,
}

impl DetectionResult {
    pub fn indices(&self) -> Vec<usize> {
        self.detections.iter().map(|d| d.preamble).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Non-coherent sum over antennas of `|cyclic_correlate(rx, root)|^2`.
pub fn compute_pdp(window: &ReceivedWindow, preambles: &PreambleSet) -> Result<PowerDelayProfile> {
    let root = preambles.root();
    let mut bins = vec![0.0; root.len()];
    for rx in &window.per_antenna {
        let r = cyclic_correlate(rx, root)?;
        for (b, z) in bins.iter_mut().zip(r.samples()) {
            *b += z.norm_sqr();
        }
    }
    Ok(PowerDelayProfile {
        bins,
        root_u: preambles.config().root_u,
    })
}

pub fn detect(pdp: &PowerDelayProfile, cfg: &DetectorConfig) -> DetectionResult {
    let threshold = cfg.threshold_factor * pdp.noise_floor(cfg.noise_floor);
    let detections = pdp
        .zone_peaks(cfg.n_cs, cfg.n_preambles)
        .enumerate()
        .filter(|&(_, (_, p))| p > threshold)
        .map(|(v, (i, p))| Detection {
            preamble: v,
            peak_power: p,
            delay_samples: i - v * cfg.n_cs,
        })
        .collect();
    DetectionResult { detections }
}

/// Persisted outcome of a threshold calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub profile: String,
    pub threshold_factor: f64,
    pub target_far: f64,
    pub windows: usize,
    pub n_antennas: usize,
    pub empirical_far: f64,
    pub noise_floor: NoiseFloor,
}

impl ThresholdRecord {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

pub const FACTOR_SEARCH_MAX: f64 = 100.0;
pub const FACTOR_TOLERANCE: f64 = 0.01;

/// Peak-to-floor statistic of `n` noise-only windows through `profile`.
pub fn noise_statistics(
    prach: &PrachConfig,
    profile: &ChannelProfile,
    cfg: &DetectorConfig,
    n_antennas: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let preambles = PreambleSet::new(*prach)?;
    (0..n)
        .into_par_iter()
        .map(|w| {
            let wseed = seed::derive(seed, &[w as u64]);
            let realization = realize(profile, n_antennas, seed::derive(wseed, &[1]))?;
            let scenario = TxScenario {
                preamble_index: None,
                ta_us: 0.0,
                snr_db: 0.0,
                n_antennas,
                seed: seed::derive(wseed, &[2]),
            };
            let window = transmit(prach, None, &realization, &scenario)?;
            Ok(compute_pdp(&window, &preambles)?.peak_to_floor(cfg))
        })
        .collect()
}

/// Smallest factor in `(1, 100]` (to 0.01) whose false-alarm fraction on
/// noise-only windows is at most `target_far`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_threshold(
    prach: &PrachConfig,
    profile: &ChannelProfile,
    target_far: f64,
    n_noise_windows: usize,
    template: &DetectorConfig,
    n_antennas: usize,
    seed: u64,
) -> Result<ThresholdRecord> {
    if !(target_far > 0.0 && target_far <= 1.0) {
        return Err(Error::Calibration(format!("target FAR {target_far} outside (0, 1]")));
    }
    let needed = (10.0 / target_far - 1e-9).ceil() as usize;
    if n_noise_windows < needed {
        return Err(Error::Calibration(format!(
            "{n_noise_windows} windows cannot resolve FAR {target_far}; need at least {needed}"
        )));
    }
    let stats = noise_statistics(prach, profile, template, n_antennas, n_noise_windows, seed)?;
    let far_at = |f: f64| stats.iter().filter(|&&s| s > f).count() as f64 / stats.len() as f64;
    if far_at(FACTOR_SEARCH_MAX) > target_far {
        return Err(Error::Calibration(format!(
            "FAR {} at factor {FACTOR_SEARCH_MAX} still exceeds {target_far}",
            far_at(FACTOR_SEARCH_MAX)
        )));
    }
    let (mut lo, mut hi) = (1.0, FACTOR_SEARCH_MAX);
    while hi - lo > FACTOR_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if far_at(mid) <= target_far {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdRecord {
        profile: profile.name().to_string(),
        threshold_factor: hi,
        target_far,
        windows: n_noise_windows,
        n_antennas,
        empirical_far: far_at(hi),
        noise_floor: template.noise_floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelProfile;

    fn cfg(f: f64) -> DetectorConfig {
        DetectorConfig::new(&PrachConfig::default(), f)
    }

    fn noiseless(v: usize, ta_samples: usize, n_antennas: usize) -> ReceivedWindow {
        let prach = PrachConfig::default();
        let set = PreambleSet::new(prach).unwrap();
        let r = realize(&ChannelProfile::awgn(), n_antennas, 1).unwrap();
        let sc = TxScenario {
            preamble_index: Some(v),
            ta_us: ta_samples as f64 * prach.sample_period_us(),
            snr_db: f64::INFINITY,
            n_antennas,
            seed: 0,
        };
        transmit(&prach, Some(set.get(v).unwrap()), &r, &sc).unwrap()
    }

    #[test]
    fn noiseless_pdp_has_a_single_peak() {
        let set = PreambleSet::new(PrachConfig::default()).unwrap();
        for n_ant in [1usize, 2] {
            let pdp = compute_pdp(&noiseless(10, 0, n_ant), &set).unwrap();
            let expected = 839.0f64.powi(2) * n_ant as f64;
            assert!((pdp.bins[130] - expected).abs() / expected < 1e-6);
            for (i, b) in pdp.bins.iter().enumerate() {
                assert!(*b >= 0.0);
                if i != 130 {
                    assert!(*b < 1e-6 * expected);
                }
            }
        }
    }

    #[test]
    fn zero_window_gives_zero_pdp_and_no_detection() {
        let set = PreambleSet::new(PrachConfig::default()).unwrap();
        let mut w = noiseless(0, 0, 1);
        w.per_antenna[0] = crate::zc::ComplexSequence::zeros(839);
        let pdp = compute_pdp(&w, &set).unwrap();
        assert!(pdp.bins.iter().all(|&b| b == 0.0));
        assert!(detect(&pdp, &cfg(2.0)).is_empty());
    }

    #[test]
    fn constructed_profiles() {
        let mut bins = vec![1.0; 839];
        bins[7 * 13 + 4] = 500.0;
        let pdp = PowerDelayProfile { bins, root_u: 129 };
        let r = detect(&pdp, &cfg(10.0));
        assert_eq!(r.detections.len(), 1);
        assert_eq!(r.detections[0].preamble, 7);
        assert_eq!(r.detections[0].delay_samples, 4);
        assert_eq!(r.detections[0].peak_power, 500.0);

        let flat = PowerDelayProfile { bins: vec![3.0; 839], root_u: 129 };
        assert!(detect(&flat, &cfg(1.0001)).is_empty());

        let mut bins = vec![1.0; 839];
        bins[2 * 13] = 400.0;
        bins[50 * 13 + 12] = 300.0;
        let two = detect(&PowerDelayProfile { bins, root_u: 129 }, &cfg(10.0));
        assert_eq!(two.indices(), vec![2, 50]);
        assert_eq!(two.detections[1].delay_samples, 12);
    }

    #[test]
    fn median_floor() {
        let pdp = PowerDelayProfile { bins: vec![1.0, 2.0, 100.0, 3.0], root_u: 1 };
        assert_eq!(pdp.noise_floor(NoiseFloor::Median), 2.5);
        assert_eq!(pdp.noise_floor(NoiseFloor::Mean), 26.5);
    }

    #[test]
    fn config_rejects_factor_at_or_below_one() {
        assert!(cfg(1.0).validate().is_err());
        assert!(cfg(1.5).validate().is_ok());
    }

    #[test]
    fn noiseless_detection_recovers_index_and_delay() {
        let set = PreambleSet::new(PrachConfig::default()).unwrap();
        for v in [0usize, 1, 31, 63] {
            let pdp = compute_pdp(&noiseless(v, 5, 1), &set).unwrap();
            let r = detect(&pdp, &cfg(13.0));
            assert_eq!(r.indices(), vec![v]);
            assert_eq!(r.detections[0].delay_samples, 5);
        }
    }

    #[test]
    fn scaling_the_window_scales_the_pdp() {
        let set = PreambleSet::new(PrachConfig::default()).unwrap();
        let w = noiseless(12, 3, 1);
        let mut scaled = w.clone();
        scaled.per_antenna[0] = w.per_antenna[0].scaled(3.0);
        let a = compute_pdp(&w, &set).unwrap();
        let b = compute_pdp(&scaled, &set).unwrap();
        for (x, y) in a.bins.iter().zip(&b.bins) {
            assert!((y - 9.0 * x).abs() <= 1e-9 * (1.0 + y.abs()));
        }
        assert_eq!(detect(&a, &cfg(5.0)).indices(), detect(&b, &cfg(5.0)).indices());
    }

    #[test]
    fn calibration_edge_cases() {
        let prach = PrachConfig::default();
        let awgn = ChannelProfile::awgn();
        let rec = calibrate_threshold(&prach, &awgn, 1.0, 20, &cfg(2.0), 1, 4).unwrap();
        assert!(rec.threshold_factor > 1.0 && rec.threshold_factor <= 1.0 + FACTOR_TOLERANCE);
        assert!(matches!(
            calibrate_threshold(&prach, &awgn, 0.001, 500, &cfg(2.0), 1, 4),
            Err(Error::Calibration(_))
        ));
    }

    #[test]
    fn calibration_hits_a_loose_target() {
        let prach = PrachConfig::default();
        let awgn = ChannelProfile::awgn();
        let rec = calibrate_threshold(&prach, &awgn, 0.05, 2000, &cfg(2.0), 1, 8).unwrap();
        assert!(rec.empirical_far <= 0.05);
        // Exponential bins: P(any of ~832 exceed f * mean) ~ 832 e^{-f}.
        assert!(rec.threshold_factor > 8.0 && rec.threshold_factor < 12.0, "{}", rec.threshold_factor);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        rec.save(&path).unwrap();
        assert_eq!(ThresholdRecord::load(&path).unwrap(), rec);
    }
}
