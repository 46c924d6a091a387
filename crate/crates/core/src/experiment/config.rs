use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::sha256_hex;
use crate::dataset::GenConfig;
use crate::detector::NoiseFloor;
use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::seed;
use crate::zc::PrachConfig;

/// Inclusive SNR grid `lo, lo + step, .., hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl SnrGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::config(format!("bad SNR grid {:?}", self)));
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        // Round to 1e-9 dB so that grids built from decimal steps compare exactly.
        Ok((0..n).map(|i| ((self.lo + i as f64 * self.step) * 1e9).round() / 1e9).collect())
    }
}

fn default_channels_train() -> Vec<String> {
    ["AWGN", "EPA", "EVA", "ETU"].map(String::from).to_vec()
}

fn default_channels_eval() -> Vec<String> {
    ["AWGN", "EPA", "EVA", "ETU", "TDLC300", "TDLD30"].map(String::from).to_vec()
}

fn full_grid() -> SnrGrid {
    SnrGrid { lo: -20.0, hi: 20.0, step: 1.0 }
}

/// Training-data protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub channels: Vec<String>,
    pub snr: SnrGrid,
    pub windows_per_point: usize,
    pub n_antennas: usize,
    pub ta_us: f64,
    /// Held-out fraction for the validation accuracy.
    pub validation_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            channels: default_channels_train(),
            snr: full_grid(),
            windows_per_point: 100,
            n_antennas: 2,
            ta_us: 2.0,
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Analytical,
    Svm,
}

/// Sweep protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub channels: Vec<String>,
    pub snr: SnrGrid,
    pub windows_per_point: usize,
    pub n_antennas: usize,
    pub ta_us: f64,
    /// Probability that a sweep window carries no preamble.
    pub noise_only_fraction: f64,
    pub detectors: Vec<DetectorKind>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            channels: default_channels_eval(),
            snr: full_grid(),
            windows_per_point: 1000,
            n_antennas: 1,
            ta_us: 2.0,
            noise_only_fraction: 0.5,
            detectors: vec![DetectorKind::Analytical, DetectorKind::Svm],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub target_far: f64,
    pub calibration_windows: usize,
    pub noise_floor: NoiseFloor,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self { target_far: 1e-3, calibration_windows: 100_000, noise_floor: NoiseFloor::Mean }
    }
}

/// How a tuning trial's cost is measured for the acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostModel {
    /// Operation count of the fits, scaled to nominal seconds; reproducible.
    Work,
    /// Measured wall-clock seconds.
    Wall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    pub n_iter: usize,
    pub folds: usize,
    pub cost: CostModel,
    /// SMO iteration cap per binary problem during tuning.
    pub max_iter: usize,
}

impl Default for TuneSection {
    fn default() -> Self {
        Self { n_iter: 30, folds: 5, cost: CostModel::Work, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Directory of extra channel profiles; files shadow the bundled ones.
    pub profile_dir: Option<PathBuf>,
    pub prach: PrachConfig,
    pub train: TrainSection,
    pub evaluate: EvalSection,
    pub detector: DetectorSection,
    pub pipeline: PipelineConfig,
    pub tune: TuneSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            out_dir: PathBuf::from("runs/full"),
            profile_dir: None,
            prach: PrachConfig::default(),
            train: TrainSection::default(),
            evaluate: EvalSection::default(),
            detector: DetectorSection::default(),
            pipeline: PipelineConfig::default(),
            tune: TuneSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Single-channel, coarse-grid preset that runs on a laptop.
    pub fn desk() -> Self {
        let grid = SnrGrid { lo: -20.0, hi: 20.0, step: 5.0 };
        Self {
            out_dir: PathBuf::from("runs/desk"),
            train: TrainSection {
                channels: vec!["AWGN".into()],
                snr: grid,
                windows_per_point: 10,
                ..TrainSection::default()
            },
            evaluate: EvalSection {
                channels: vec!["AWGN".into()],
                snr: grid,
                windows_per_point: 200,
                ..EvalSection::default()
            },
            detector: DetectorSection { calibration_windows: 20_000, ..DetectorSection::default() },
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.prach.validate()?;
        self.train.snr.values()?;
        self.evaluate.snr.values()?;
        if self.train.channels.is_empty() || self.evaluate.channels.is_empty() {
            return Err(Error::config("channel lists must not be empty"));
        }
        if self.evaluate.windows_per_point == 0 || self.evaluate.n_antennas == 0 {
            return Err(Error::config("evaluation needs windows and antennas"));
        }
        if !(0.0..=1.0).contains(&self.evaluate.noise_only_fraction) {
            return Err(Error::config("noise_only_fraction must lie in [0, 1]"));
        }
        if !(self.train.validation_fraction > 0.0 && self.train.validation_fraction < 1.0) {
            return Err(Error::config("validation_fraction must lie in (0, 1)"));
        }
        if !(self.pipeline.variance_target > 0.0 && self.pipeline.variance_target <= 1.0) {
            return Err(Error::config("variance_target must lie in (0, 1]"));
        }
        self.pipeline.svm.validate()?;
        let lib = crate::channel::ProfileLibrary::new(self.profile_dir.clone());
        for c in self.train.channels.iter().chain(&self.evaluate.channels) {
            lib.get(c)?;
        }
        Ok(())
    }

    /// sha256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        sha256_hex(&serde_json::to_vec(&c).expect("config serializes"))
    }

    pub fn prach_hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(&self.prach).expect("config serializes"))
    }

    pub fn stream_seed(&self, name: &str) -> u64 {
        seed::derive(self.seed, &[seed::tag(name)])
    }

    pub fn gen_config(&self) -> Result<GenConfig> {
        Ok(GenConfig {
            prach: self.prach,
            channels: self.train.channels.clone(),
            snr_db: self.train.snr.values()?,
            windows_per_point: self.train.windows_per_point,
            n_antennas: self.train.n_antennas,
            ta_us: self.train.ta_us,
            seed: self.stream_seed("train"),
        })
    }
}
