//! False-alarm and miss-detection bookkeeping.
//!
//! Per window with truth `v`: a miss when `v` is not among the detections,
//! one false alarm for every detected index other than `v`. A window with
//! nothing sent counts a false alarm per detected index. So a classifier
//! that names the wrong preamble scores both a miss and a false alarm.
//!
//! FAR is false alarms over all scored windows, MDR is misses over windows
//! that carried a preamble.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowOutcome {
    pub truth: Option<usize>,
    /// Detected indices, or the single predicted label.
    pub detections: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DetectionStats {
    pub tx_count: u64,
    pub md_count: u64,
    pub fa_count: u64,
    pub window_count: u64,
    pub noise_window_count: u64,
    /// Windows whose detections are exactly the truth (empty for noise).
    pub correct_count: u64,
}

impl DetectionStats {
    pub fn score(&mut self, outcome: &WindowOutcome) {
        self.window_count += 1;
        match outcome.truth {
            Some(v) => {
                self.tx_count += 1;
                if !outcome.detections.contains(&v) {
                    self.md_count += 1;
                }
                self.fa_count += outcome.detections.iter().filter(|&&d| d != v).count() as u64;
                if outcome.detections.iter().all(|&d| d == v) && !outcome.detections.is_empty() {
                    self.correct_count += 1;
                }
            }
            None => {
                self.noise_window_count += 1;
                self.fa_count += outcome.detections.len() as u64;
                if outcome.detections.is_empty() {
                    self.correct_count += 1;
                }
            }
        }
    }

    pub fn merge(&mut self, other: &DetectionStats) {
        self.tx_count += other.tx_count;
        self.md_count += other.md_count;
        self.fa_count += other.fa_count;
        self.window_count += other.window_count;
        self.noise_window_count += other.noise_window_count;
        self.correct_count += other.correct_count;
    }

    pub fn far(&self) -> Option<f64> {
        ratio(self.fa_count, self.window_count)
    }

    pub fn mdr(&self) -> Option<f64> {
        ratio(self.md_count, self.tx_count)
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.correct_count, self.window_count)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Functional form of [`DetectionStats::score`].
pub fn score_window(outcome: &WindowOutcome, stats: DetectionStats) -> DetectionStats {
    let mut s = stats;
    s.score(outcome);
    s
}

/// `(far, mdr)`; `None` where the denominator is zero.
pub fn rates(stats: &DetectionStats) -> (Option<f64>, Option<f64>) {
    (stats.far(), stats.mdr())
}

/// Square count matrix, rows = predicted class, columns = actual class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self { n: n_classes, counts: vec![0; n_classes * n_classes] }
    }

    pub fn from_predictions(n_classes: usize, predicted: &[usize], actual: &[usize]) -> Result<Self> {
        if predicted.len() != actual.len() {
            return Err(Error::Shape { expected: actual.len(), got: predicted.len() });
        }
        let mut cm = Self::new(n_classes);
        for (&p, &a) in predicted.iter().zip(actual) {
            cm.record(p, a)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, predicted: usize, actual: usize) -> Result<()> {
        for i in [predicted, actual] {
            if i >= self.n {
                return Err(Error::Index { index: i, limit: self.n });
            }
        }
        self.counts[predicted * self.n + actual] += 1;
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, predicted: usize, actual: usize) -> u64 {
        self.counts[predicted * self.n + actual]
    }

    /// Rows classified under `actual`.
    pub fn column_sum(&self, actual: usize) -> u64 {
        (0..self.n).map(|p| self.get(p, actual)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W, comment: &str) -> Result<()> {
        let mut out = out;
        writeln!(out, "# rows = predicted class, columns = actual class")?;
        if !comment.is_empty() {
            writeln!(out, "# {comment}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["predicted".to_string()];
        header.extend((0..self.n).map(|a| a.to_string()));
        w.write_record(&header).map_err(csv_err)?;
        for p in 0..self.n {
            let mut rec = vec![p.to_string()];
            rec.extend((0..self.n).map(|a| self.get(p, a).to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Trace over total.
pub fn confusion_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::config("confusion matrix is empty")),
        t => Ok(cm.trace() as f64 / t as f64),
    }
}

/// Lowest grid SNR from which MDR stays at or below `target` for every
/// higher grid point. `curve` is `(snr_db, mdr)` sorted by SNR; points with
/// an undefined MDR are skipped.
pub fn reference_snr(curve: &[(f64, Option<f64>)], mdr_target: f64) -> Option<f64> {
    let mut best = None;
    for &(snr, mdr) in curve.iter().rev() {
        match mdr {
            Some(m) if m <= mdr_target => best = Some(snr),
            Some(_) => break,
            None => {}
        }
    }
    best
}

pub const DEFAULT_MDR_TARGET: f64 = 0.01;

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub snr_db: f64,
    pub detector: String,
    pub channel: String,
    pub stats: DetectionStats,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    snr_db: f64,
    detector: &'a str,
    channel: &'a str,
    tx_count: u64,
    window_count: u64,
    md_count: u64,
    fa_count: u64,
    mdr: String,
    far: String,
    accuracy: String,
}

fn rate_str(r: Option<f64>) -> String {
    r.map_or_else(|| "NaN".to_string(), |v| format!("{v:.6}"))
}

/// Sweep CSV with a leading `# ` comment line (config hash and the like).
pub fn write_sweep_csv<W: Write>(out: W, records: &[SweepRecord], comment: &str) -> Result<()> {
    let mut out = out;
    writeln!(out, "# {comment}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow {
            snr_db: r.snr_db,
            detector: &r.detector,
            channel: &r.channel,
            tx_count: r.stats.tx_count,
            window_count: r.stats.window_count,
            md_count: r.stats.md_count,
            fa_count: r.stats.fa_count,
            mdr: rate_str(r.stats.mdr()),
            far: rate_str(r.stats.far()),
            accuracy: rate_str(r.stats.accuracy()),
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
