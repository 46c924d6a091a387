use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::store::{Dataset, DatasetHeader, DatasetWriter};
use crate::channel::{simulate_window, ChannelProfile, ProfileLibrary};
use crate::codec::sha256_hex;
use crate::error::{Error, Result};
use crate::features::{vectorize, FeatureMatrix, Layout, RowMeta};
use crate::seed;
use crate::zc::{PrachConfig, PreambleSet};

/// Training-set generation protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    #[serde(default)]
    pub prach: PrachConfig,
    pub channels: Vec<String>,
    pub snr_db: Vec<f64>,
    /// Occasions per (channel, SNR, preamble).
    pub windows_per_point: usize,
    pub n_antennas: usize,
    pub ta_us: f64,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        self.prach.validate()?;
        if self.channels.is_empty() {
            return Err(Error::config("channel list is empty"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| s.is_nan()) {
            return Err(Error::config("SNR grid is empty or contains NaN"));
        }
        if self.windows_per_point == 0 {
            return Err(Error::config("windows_per_point must be positive"));
        }
        if self.n_antennas == 0 || self.n_antennas > u8::MAX as usize {
            return Err(Error::config(format!("n_antennas {} outside 1..=255", self.n_antennas)));
        }
        if self.channels.len() > u16::MAX as usize || self.snr_db.len() > u16::MAX as usize {
            return Err(Error::config("too many channels or SNR points"));
        }
        Ok(())
    }

    /// Rows the config produces.
    pub fn planned_rows(&self) -> u64 {
        (self.channels.len() * self.snr_db.len() * self.prach.n_preambles * self.windows_per_point * self.n_antennas)
            as u64
    }

    /// sha256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    fn header(&self) -> DatasetHeader {
        DatasetHeader {
            n_zc: self.prach.n_zc,
            feature_dim: 2 * self.prach.n_zc,
            layout: Layout::Blocked,
            row_count: self.planned_rows(),
            config_hash: self.hash(),
            channels: self.channels.clone(),
            snr_grid: self.snr_db.clone(),
        }
    }

    /// Seed of one occasion; independent of the other grid entries.
    pub fn window_seed(&self, channel: &str, snr_db: f64, preamble: usize, window: usize) -> u64 {
        seed::derive(self.seed, &[seed::tag(channel), snr_db.to_bits(), preamble as u64, window as u64])
    }
}

type Block = Vec<(Vec<f64>, usize, RowMeta)>;

fn generate_block(
    cfg: &GenConfig,
    preambles: &PreambleSet,
    profile: &ChannelProfile,
    ch: usize,
    snr_db: f64,
) -> Result<Block> {
    let mut rows = Vec::with_capacity(cfg.prach.n_preambles * cfg.windows_per_point * cfg.n_antennas);
    for v in 0..cfg.prach.n_preambles {
        for w in 0..cfg.windows_per_point {
            let wseed = cfg.window_seed(&cfg.channels[ch], snr_db, v, w);
            let win = simulate_window(preambles, profile, Some(v), cfg.ta_us, snr_db, cfg.n_antennas, wseed)?;
            for (a, sig) in win.per_antenna.iter().enumerate() {
                // Round once so in-memory and on-disk features agree.
                let f: Vec<f64> = vectorize(sig, cfg.prach.n_zc)?.into_iter().map(|x| x as f32 as f64).collect();
                rows.push((f, v, RowMeta { snr_db, channel: ch as u16, antenna: a as u8, seed: wseed }));
            }
        }
    }
    Ok(rows)
}

/// Blocks in file order, produced `batch` at a time in parallel.
fn for_each_block(
    cfg: &GenConfig,
    library: &ProfileLibrary,
    mut sink: impl FnMut(Block) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    let preambles = PreambleSet::new(cfg.prach)?;
    let profiles = cfg.channels.iter().map(|c| library.get(c)).collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, f64)> =
        (0..cfg.channels.len()).flat_map(|c| cfg.snr_db.iter().map(move |&s| (c, s))).collect();
    let batch = rayon::current_num_threads().max(1);
    for chunk in cells.chunks(batch) {
        let blocks = chunk
            .par_iter()
            .map(|&(c, s)| generate_block(cfg, &preambles, &profiles[c], c, s))
            .collect::<Result<Vec<_>>>()?;
        for b in blocks {
            sink(b)?;
        }
    }
    Ok(())
}

/// Generate in memory.
pub fn generate_matrix(cfg: &GenConfig, library: &ProfileLibrary) -> Result<Dataset> {
    let header = cfg.header();
    let mut m = FeatureMatrix::new(header.feature_dim);
    m.channels = cfg.channels.clone();
    for_each_block(cfg, library, |b| {
        for (f, l, meta) in b {
            m.push(&f, l, meta)?;
        }
        Ok(())
    })?;
    Ok(Dataset { header, matrix: m })
}

/// Generate straight to a file, one block in memory per worker.
pub fn generate_dataset(cfg: &GenConfig, library: &ProfileLibrary, path: &Path) -> Result<DatasetHeader> {
    cfg.validate()?;
    // Resolve profiles before touching the file system.
    for c in &cfg.channels {
        library.get(c)?;
    }
    let mut w = DatasetWriter::create(path, cfg.header())?;
    let result = for_each_block(cfg, library, |b| {
        for (f, l, meta) in b {
            w.push(&f, l, &meta)?;
        }
        Ok(())
    });
    match result {
        Ok(()) => w.finish(),
        Err(e) => {
            drop(w);
            let _ = std::fs::remove_file(path);
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::read_dataset;

    fn small() -> GenConfig {
        GenConfig {
            prach: PrachConfig::default(),
            channels: vec!["AWGN".into(), "EPA".into()],
            snr_db: vec![-10.0, 10.0],
            windows_per_point: 1,
            n_antennas: 2,
            ta_us: 2.0,
            seed: 5,
        }
    }

    #[test]
    fn planned_counts() {
        let mut desk = small();
        desk.channels = vec!["AWGN".into()];
        desk.snr_db = (-4..=4).map(|i| 5.0 * i as f64).collect();
        desk.windows_per_point = 10;
        assert_eq!(desk.planned_rows(), 11_520);
        let mut full = desk.clone();
        full.channels = ["AWGN", "EPA", "EVA", "ETU"].map(String::from).to_vec();
        full.snr_db = (-20..=20).map(f64::from).collect();
        full.windows_per_point = 100;
        assert_eq!(full.planned_rows(), 2_099_200);
    }

    #[test]
    fn file_matches_memory_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let lib = ProfileLibrary::new(None);
        let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
        let cfg = small();
        let h = generate_dataset(&cfg, &lib, &a).unwrap();
        generate_dataset(&cfg, &lib, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let mem = generate_matrix(&cfg, &lib).unwrap();
        let disk = read_dataset(&a).unwrap();
        assert_eq!(disk, mem);
        assert_eq!(h.row_count, 512);
        // Row order: channel, snr, preamble, window, antenna.
        let meta = disk.matrix.meta();
        assert_eq!((meta[0].channel, meta[0].snr_db, meta[0].antenna), (0, -10.0, 0));
        assert_eq!((meta[1].antenna, disk.matrix.labels()[1]), (1, 0));
        assert_eq!(disk.matrix.labels()[2], 1);
        assert_eq!((meta[128].snr_db, meta[256].channel), (10.0, 1));
        assert_eq!(meta[0].seed, meta[1].seed);
    }

    #[test]
    fn hash_tracks_config() {
        let cfg = small();
        assert_eq!(cfg.hash(), small().hash());
        let mut other = small();
        other.seed = 6;
        assert_ne!(cfg.hash(), other.hash());
        other = small();
        other.ta_us = 2.5;
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn bad_configs_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let lib = ProfileLibrary::new(None);
        let p = dir.path().join("x.bin");
        let mut cfg = small();
        cfg.channels.clear();
        assert!(generate_dataset(&cfg, &lib, &p).is_err());
        cfg.channels = vec!["NOPE".into()];
        assert!(generate_dataset(&cfg, &lib, &p).is_err());
        assert!(!p.exists());
    }
}
