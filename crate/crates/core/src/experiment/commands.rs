use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::config::{CostModel, DetectorKind, ExperimentConfig};
use super::reference::{published_far_snr, published_reference_snr, PUBLISHED_ACCURACY, PUBLISHED_K};
use super::sweep::{far_curve, measured_reference_snr, run_sweep, SweepChannel, SweepPlan, ANALYTICAL, SVM, SVM_NOISE_ONLY};
use crate::channel::ProfileLibrary;
use crate::dataset::{generate_dataset, read_dataset, stratified_kfold, stratified_holdout, Dataset};
use crate::detector::{calibrate_threshold, DetectorConfig, ThresholdRecord};
use crate::error::{Error, Result};
use crate::features::{fit_pca, FeatureMatrix};
use crate::hyperopt::{
    incumbent_csv, run_optimization, svm_config_from_point, Evaluation, OptConfig, Point, SearchSpace, Trial,
};
use crate::metrics::{reference_snr, write_sweep_csv, ConfusionMatrix, SweepRecord};
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::seed;
use crate::svm::{train_multiclass, Coding, KernelSpec, MultiClassSvmModel};

pub const DATASET_FILE: &str = "train.ds";
pub const PCA_FILE: &str = "pca.bin";
pub const SVM_FILE: &str = "svm.bin";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const TRAIN_SUMMARY: &str = "train.json";
pub const TRIAL_LOG: &str = "trials.jsonl";
pub const INCUMBENT_FILE: &str = "incumbent.csv";
pub const TUNE_SUMMARY: &str = "tune.json";
pub const TUNED_DIR: &str = "tuned";
pub const THRESHOLD_FILE: &str = "thresholds.json";
pub const SWEEP_SUMMARY: &str = "sweep.json";
pub const REPORT_FILE: &str = "report.csv";

/// FAR level used for the SVM's FAR reference SNR.
pub const FAR_TARGET: f64 = 1e-3;

/// Per-invocation switches that are not part of the experiment config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub dry_run: bool,
    /// Continue a partial trial log.
    pub resume: bool,
    /// Overrides `detector.calibration_windows`.
    pub calibration_windows: Option<usize>,
    /// Where `cmd_sweep` looks for `pca.bin` and `svm.bin`; defaults to the output directory.
    pub models_dir: Option<PathBuf>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(&cfg.out_dir)
}

fn library(cfg: &ExperimentConfig) -> ProfileLibrary {
    ProfileLibrary::new(cfg.profile_dir.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub config_hash: String,
    pub dataset_hash: String,
    pub rows: u64,
    pub written: bool,
}

pub fn cmd_generate(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<GenerateSummary> {
    let gen = cfg.gen_config()?;
    let rows = gen.planned_rows();
    writeln!(
        out,
        "training set: {} channels x {} SNR points x {} preambles x {} windows x {} antennas = {rows} rows",
        gen.channels.len(),
        gen.snr_db.len(),
        gen.prach.n_preambles,
        gen.windows_per_point,
        gen.n_antennas
    )?;
    let mut summary = GenerateSummary { config_hash: cfg.hash(), dataset_hash: gen.hash(), rows, written: false };
    if opts.dry_run {
        writeln!(out, "dry run: nothing written")?;
        return Ok(summary);
    }
    let path = out_dir(cfg)?.join(DATASET_FILE);
    info!("generating {}", path.display());
    generate_dataset(&gen, &library(cfg), &path)?;
    summary.written = true;
    writeln!(out, "wrote {}", path.display())?;
    Ok(summary)
}

fn load_training_set(cfg: &ExperimentConfig) -> Result<Dataset> {
    let path = cfg.out_dir.join(DATASET_FILE);
    if !path.exists() {
        return Err(Error::config(format!("{} not found; run `generate` first", path.display())));
    }
    let ds = read_dataset(&path)?;
    let expected = cfg.gen_config()?.hash();
    if ds.header.config_hash != expected {
        return Err(Error::config(format!(
            "{} was generated from a different configuration; rerun `generate`",
            path.display()
        )));
    }
    Ok(ds)
}

fn groups(m: &FeatureMatrix) -> Vec<u64> {
    m.meta().iter().map(|r| r.seed).collect()
}

/// Training and validation parts of the training set.
fn holdout(cfg: &ExperimentConfig, m: &FeatureMatrix) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let (tr, va) =
        stratified_holdout(m.labels(), &groups(m), cfg.train.validation_fraction, cfg.stream_seed("holdout"))?;
    Ok((m.subset(&tr), m.subset(&va)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmSetting {
    pub kernel: KernelSpec,
    pub c: f64,
    pub coding: Coding,
    pub standardize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub config_hash: String,
    pub prach_hash: String,
    pub pca_hash: String,
    pub svm_hash: String,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub k: usize,
    pub published_k: usize,
    pub explained_variance: f64,
    pub svm: SvmSetting,
    pub machines: usize,
    pub support_vectors: usize,
    pub all_converged: bool,
    pub validation_accuracy: f64,
    pub published_accuracy: f64,
    /// `(snr_db, accuracy)` on the validation rows.
    pub accuracy_by_snr: Vec<(f64, f64)>,
}

fn accuracy_by_snr(m: &FeatureMatrix, pred: &[usize]) -> Vec<(f64, f64)> {
    let mut by: BTreeMap<u64, (f64, usize, usize)> = BTreeMap::new();
    for (i, (&p, meta)) in pred.iter().zip(m.meta()).enumerate() {
        // Order-preserving key for finite doubles.
        let bits = meta.snr_db.to_bits();
        let key = if meta.snr_db < 0.0 { !bits } else { bits | 1 << 63 };
        let e = by.entry(key).or_insert((meta.snr_db, 0, 0));
        e.1 += 1;
        if p == m.labels()[i] {
            e.2 += 1;
        }
    }
    by.into_values().map(|(s, n, c)| (s, c as f64 / n as f64)).collect()
}

fn fit_and_validate(
    cfg: &ExperimentConfig,
    pipeline_cfg: &PipelineConfig,
    train: &FeatureMatrix,
    val: &FeatureMatrix,
    dir: &Path,
) -> Result<TrainSummary> {
    let mut pipeline = Pipeline::fit(train, pipeline_cfg)?;
    pipeline.svm.prach_hash = Some(cfg.prach_hash());
    let pred = pipeline.predict_matrix(val)?;
    let cm = ConfusionMatrix::from_predictions(cfg.prach.n_preambles, &pred, val.labels())?;
    let config_hash = cfg.hash();
    cm.write_csv(fs::File::create(dir.join(CONFUSION_FILE))?, &format!("config_hash={config_hash}"))?;
    pipeline.save(&dir.join(PCA_FILE), &dir.join(SVM_FILE))?;
    let svm = &pipeline.svm;
    let s = &pipeline_cfg.svm;
    Ok(TrainSummary {
        config_hash,
        prach_hash: cfg.prach_hash(),
        pca_hash: pipeline.pca.hash(),
        svm_hash: svm.hash(),
        train_rows: train.len(),
        validation_rows: val.len(),
        k: pipeline.pca.k(),
        published_k: PUBLISHED_K,
        explained_variance: pipeline.pca.cumvar.last().copied().unwrap_or(0.0),
        svm: SvmSetting { kernel: s.kernel, c: s.c, coding: s.coding, standardize: s.standardize },
        machines: svm.machines().len(),
        support_vectors: svm.pool_size(),
        all_converged: svm.all_converged(),
        validation_accuracy: cm.trace() as f64 / cm.total() as f64,
        published_accuracy: PUBLISHED_ACCURACY,
        accuracy_by_snr: accuracy_by_snr(val, &pred),
    })
}

fn print_train(out: &mut dyn Write, t: &TrainSummary) -> Result<()> {
    writeln!(out, "train rows {}, validation rows {}", t.train_rows, t.validation_rows)?;
    writeln!(out, "PCA: k = {} (published {}), explained variance {:.4}", t.k, t.published_k, t.explained_variance)?;
    writeln!(
        out,
        "SVM: kernel {:?}, scale {}, C = {}, coding {:?}, standardize {}",
        t.svm.kernel.kind, t.svm.kernel.scale, t.svm.c, t.svm.coding, t.svm.standardize
    )?;
    writeln!(
        out,
        "     {} machines, {} support vectors, converged {}",
        t.machines, t.support_vectors, t.all_converged
    )?;
    writeln!(
        out,
        "validation accuracy {:.4} (published {:.3})",
        t.validation_accuracy, t.published_accuracy
    )?;
    for (snr, acc) in &t.accuracy_by_snr {
        writeln!(out, "  {snr:>6.1} dB  {acc:.4}")?;
    }
    Ok(())
}

pub fn cmd_train(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<Option<TrainSummary>> {
    if opts.dry_run {
        writeln!(out, "dry run: would train on {}", cfg.out_dir.join(DATASET_FILE).display())?;
        return Ok(None);
    }
    let ds = load_training_set(cfg)?;
    let (train, val) = holdout(cfg, &ds.matrix)?;
    let dir = out_dir(cfg)?;
    let summary = fit_and_validate(cfg, &cfg.pipeline, &train, &val, dir)?;
    write_json(&dir.join(TRAIN_SUMMARY), &summary)?;
    print_train(out, &summary)?;
    Ok(Some(summary))
}

/// PCA-reduced train/test parts of one tuning fold.
struct Fold {
    train: FeatureMatrix,
    test: FeatureMatrix,
    pca_work: f64,
}

fn tuning_folds(cfg: &ExperimentConfig, m: &FeatureMatrix) -> Result<Vec<Fold>> {
    let tests = stratified_kfold(m.labels(), &groups(m), cfg.tune.folds, cfg.stream_seed("tune-folds"))?;
    tests
        .iter()
        .map(|test| {
            let mut in_test = vec![false; m.len()];
            test.iter().for_each(|&i| in_test[i] = true);
            let train_idx: Vec<usize> = (0..m.len()).filter(|&i| !in_test[i]).collect();
            let raw = m.subset(&train_idx);
            let pca = fit_pca(&raw, cfg.pipeline.variance_target)?;
            let (n, d) = (raw.len() as f64, raw.dim() as f64);
            Ok(Fold {
                train: pca.project_matrix(&raw)?,
                test: pca.project_matrix(&m.subset(test))?,
                pca_work: n * d * (d + pca.k() as f64),
            })
        })
        .collect()
}

/// Operation count of one multi-class fit and its test predictions.
fn fit_work(model: &MultiClassSvmModel, n_train: usize, n_test: usize) -> f64 {
    let k = model.dim() as f64;
    let gram = (n_train as f64).powi(2) * k;
    let iters: f64 = model.machines().iter().map(|m| (m.report.iterations * m.report.rows) as f64).sum();
    gram + iters + n_test as f64 * model.pool_size() as f64 * k
}

/// Nominal operations per second used to express work as seconds.
const WORK_RATE: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneSummary {
    pub config_hash: String,
    pub trials: usize,
    pub best_iteration: usize,
    pub best_point: Point,
    pub best_cv_error: f64,
    pub incumbent: Vec<f64>,
    pub tuned: TrainSummary,
    /// Published winner: quadratic kernel, C = 0.09, scale 1, one-vs-all.
    pub published: SvmSetting,
}

pub fn cmd_tune(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<Option<TuneSummary>> {
    if opts.dry_run {
        writeln!(
            out,
            "dry run: would run {} trials of {}-fold cross-validation on {}",
            cfg.tune.n_iter,
            cfg.tune.folds,
            cfg.out_dir.join(DATASET_FILE).display()
        )?;
        return Ok(None);
    }
    let ds = load_training_set(cfg)?;
    let (train, val) = holdout(cfg, &ds.matrix)?;
    info!("fitting {} fold PCA models", cfg.tune.folds);
    let folds = tuning_folds(cfg, &train)?;
    let pca_work: f64 = folds.iter().map(|f| f.pca_work).sum();
    let mut base = cfg.pipeline.svm.clone();
    base.max_iter = Some(cfg.tune.max_iter);
    let space = SearchSpace::svm_default();
    let dir = out_dir(cfg)?;
    let opt = OptConfig {
        n_iter: cfg.tune.n_iter,
        seed: cfg.stream_seed("tune"),
        log_path: Some(dir.join(TRIAL_LOG)),
        resume: opts.resume,
    };
    let cost = cfg.tune.cost;
    let objective = |p: &Point, _seed: u64| -> Result<Evaluation> {
        let svm_cfg = svm_config_from_point(&base, p)?;
        let (mut wrong, mut total, mut work) = (0usize, 0usize, pca_work / folds.len() as f64);
        for f in &folds {
            let model = train_multiclass(&f.train, &svm_cfg)?;
            let pred = model.predict_matrix(f.test.data())?;
            wrong += pred.iter().zip(f.test.labels()).filter(|(a, b)| a != b).count();
            total += pred.len();
            work += fit_work(&model, f.train.len(), f.test.len());
        }
        let error = wrong as f64 / total as f64;
        info!("trial {p:?}: cv error {error:.4}");
        let runtime_s = match cost {
            CostModel::Work => Some(work / WORK_RATE),
            CostModel::Wall => None,
        };
        Ok(Evaluation { objective: error, runtime_s })
    };
    let result = run_optimization(objective, &space, &opt)?;
    fs::write(dir.join(INCUMBENT_FILE), format!("# config_hash={}\n{}", cfg.hash(), incumbent_csv(&result)))?;

    let best = result.history.iter().find(|t: &&Trial| t.objective == result.best_objective).expect("non-empty");
    let mut pipeline_cfg = cfg.pipeline.clone();
    pipeline_cfg.svm = svm_config_from_point(&cfg.pipeline.svm, &result.best_point)?;
    let tuned_dir = dir.join(TUNED_DIR);
    fs::create_dir_all(&tuned_dir)?;
    let tuned = fit_and_validate(cfg, &pipeline_cfg, &train, &val, &tuned_dir)?;
    let d = PipelineConfig::default().svm;
    let summary = TuneSummary {
        config_hash: cfg.hash(),
        trials: result.history.len(),
        best_iteration: best.iteration,
        best_point: result.best_point.clone(),
        best_cv_error: result.best_objective,
        incumbent: result.incumbent_curve.clone(),
        tuned,
        published: SvmSetting { kernel: d.kernel, c: d.c, coding: d.coding, standardize: d.standardize },
    };
    write_json(&dir.join(TUNE_SUMMARY), &summary)?;
    writeln!(out, "{} trials, best cross-validation error {:.4} at trial {}", summary.trials, summary.best_cv_error, best.iteration)?;
    writeln!(out, "best point: {}", serde_json::to_string(&summary.best_point)?)?;
    writeln!(out, "published winner: quadratic kernel, C = 0.09, scale 1, one-vs-all")?;
    writeln!(out, "tuned model in {}:", tuned_dir.display())?;
    print_train(out, &summary.tuned)?;
    Ok(Some(summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub config_hash: String,
    pub prach_hash: String,
    pub n_antennas: usize,
    pub records: Vec<ThresholdRecord>,
}

impl ThresholdTable {
    pub fn get(&self, channel: &str) -> Option<&ThresholdRecord> {
        self.records.iter().find(|r| r.profile == channel)
    }
}

pub fn cmd_calibrate(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<Option<ThresholdTable>> {
    let windows = opts.calibration_windows.unwrap_or(cfg.detector.calibration_windows);
    let floor = (10.0 / cfg.detector.target_far - 1e-9).ceil() as usize;
    if windows < floor {
        return Err(Error::Calibration(format!("{windows} windows is below the floor of {floor}")));
    }
    if opts.dry_run {
        writeln!(
            out,
            "dry run: would calibrate {} channels with {windows} noise windows each",
            cfg.evaluate.channels.len()
        )?;
        return Ok(None);
    }
    let table = calibrate(cfg, windows, out)?;
    write_json(&out_dir(cfg)?.join(THRESHOLD_FILE), &table)?;
    Ok(Some(table))
}

fn calibrate(cfg: &ExperimentConfig, windows: usize, out: &mut dyn Write) -> Result<ThresholdTable> {
    let lib = library(cfg);
    let mut template = DetectorConfig::new(&cfg.prach, 2.0);
    template.noise_floor = cfg.detector.noise_floor;
    let base = cfg.stream_seed("calibrate");
    let mut records = Vec::new();
    for ch in &cfg.evaluate.channels {
        let profile = lib.get(ch)?;
        let r = calibrate_threshold(
            &cfg.prach,
            &profile,
            cfg.detector.target_far,
            windows,
            &template,
            cfg.evaluate.n_antennas,
            seed::derive(base, &[seed::tag(ch)]),
        )?;
        writeln!(out, "{ch:<8} factor {:.4}  empirical FAR {:.5} over {} windows", r.threshold_factor, r.empirical_far, r.windows)?;
        records.push(r);
    }
    Ok(ThresholdTable {
        config_hash: cfg.hash(),
        prach_hash: cfg.prach_hash(),
        n_antennas: cfg.evaluate.n_antennas,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub channel: String,
    pub detector: String,
    /// Lowest SNR from which MDR stays at or below 1%.
    pub reference_snr_db: Option<f64>,
    pub published_reference_snr_db: Option<f64>,
    /// Lowest SNR from which FAR stays at or below 0.1%.
    pub far_snr_db: Option<f64>,
    pub published_far_snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config_hash: String,
    pub prach_hash: String,
    pub pca_hash: Option<String>,
    pub svm_hash: Option<String>,
    pub thresholds: Vec<ThresholdRecord>,
    pub windows_per_point: usize,
    pub n_antennas: usize,
    pub noise_only_fraction: f64,
    pub curves: Vec<CurveSummary>,
    pub records: Vec<SweepRecord>,
}

fn load_models(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Pipeline> {
    let dir = opts.models_dir.as_deref().unwrap_or(&cfg.out_dir);
    let (pca, svm) = (dir.join(PCA_FILE), dir.join(SVM_FILE));
    for p in [&pca, &svm] {
        if !p.exists() {
            return Err(Error::config(format!("{} not found; run `train` first", p.display())));
        }
    }
    let pipeline = Pipeline::load(&pca, &svm)?;
    if pipeline.svm.prach_hash.as_deref() != Some(cfg.prach_hash().as_str()) {
        return Err(Error::config("SVM model was trained under a different PRACH configuration"));
    }
    if pipeline.pca.dim != 2 * cfg.prach.n_zc {
        return Err(Error::Shape { expected: 2 * cfg.prach.n_zc, got: pipeline.pca.dim });
    }
    Ok(pipeline)
}

fn load_thresholds(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<ThresholdTable> {
    let path = cfg.out_dir.join(THRESHOLD_FILE);
    if path.exists() {
        let t: ThresholdTable = read_json(&path)?;
        let fits = t.prach_hash == cfg.prach_hash()
            && t.n_antennas == cfg.evaluate.n_antennas
            && cfg.evaluate.channels.iter().all(|c| {
                t.get(c).is_some_and(|r| r.target_far == cfg.detector.target_far && r.noise_floor == cfg.detector.noise_floor)
            });
        if fits {
            return Ok(t);
        }
        writeln!(out, "{} does not match this configuration; recalibrating", path.display())?;
    } else {
        writeln!(out, "no thresholds found; calibrating")?;
    }
    let windows = opts.calibration_windows.unwrap_or(cfg.detector.calibration_windows);
    let t = calibrate(cfg, windows, out)?;
    write_json(&path, &t)?;
    Ok(t)
}

pub fn cmd_sweep(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<Option<SweepSummary>> {
    let snr = cfg.evaluate.snr.values()?;
    let use_analytical = cfg.evaluate.detectors.contains(&DetectorKind::Analytical);
    let use_svm = cfg.evaluate.detectors.contains(&DetectorKind::Svm);
    if opts.dry_run {
        writeln!(
            out,
            "dry run: {} channels x {} SNR points x {} windows, detectors {:?}",
            cfg.evaluate.channels.len(),
            snr.len(),
            cfg.evaluate.windows_per_point,
            cfg.evaluate.detectors
        )?;
        return Ok(None);
    }
    let pipeline = if use_svm { Some(load_models(cfg, opts)?) } else { None };
    let thresholds = if use_analytical { Some(load_thresholds(cfg, opts, out)?) } else { None };
    let lib = library(cfg);
    let channels = cfg
        .evaluate
        .channels
        .iter()
        .map(|c| {
            let detector = thresholds.as_ref().map(|t| {
                let r = t.get(c).expect("checked when loading");
                let mut d = DetectorConfig::new(&cfg.prach, r.threshold_factor);
                d.noise_floor = r.noise_floor;
                d
            });
            Ok(SweepChannel { profile: lib.get(c)?, detector })
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = SweepPlan {
        prach: cfg.prach,
        channels,
        snr_db: snr,
        windows_per_point: cfg.evaluate.windows_per_point,
        n_antennas: cfg.evaluate.n_antennas,
        ta_us: cfg.evaluate.ta_us,
        noise_only_fraction: cfg.evaluate.noise_only_fraction,
        seed: cfg.stream_seed("sweep"),
    };
    info!("sweeping {} cells", plan.channels.len() * plan.snr_db.len());
    let records = run_sweep(&plan, pipeline.as_ref())?;

    let dir = out_dir(cfg)?;
    let config_hash = cfg.hash();
    let mut curves = Vec::new();
    for detector in [ANALYTICAL, SVM, SVM_NOISE_ONLY] {
        let recs: Vec<SweepRecord> = records.iter().filter(|r| r.detector == detector).cloned().collect();
        if recs.is_empty() {
            continue;
        }
        let f = fs::File::create(dir.join(format!("sweep_{detector}.csv")))?;
        write_sweep_csv(f, &recs, &format!("config_hash={config_hash}"))?;
        for ch in &cfg.evaluate.channels {
            curves.push(CurveSummary {
                channel: ch.clone(),
                detector: detector.to_string(),
                reference_snr_db: measured_reference_snr(&records, detector, ch),
                published_reference_snr_db: published_reference_snr(detector, ch),
                far_snr_db: reference_snr(&far_curve(&records, detector, ch), FAR_TARGET),
                published_far_snr_db: published_far_snr(detector, ch),
            });
        }
    }
    let summary = SweepSummary {
        config_hash,
        prach_hash: cfg.prach_hash(),
        pca_hash: pipeline.as_ref().map(|p| p.pca.hash()),
        svm_hash: pipeline.as_ref().map(|p| p.svm.hash()),
        thresholds: thresholds.map(|t| t.records).unwrap_or_default(),
        windows_per_point: plan.windows_per_point,
        n_antennas: plan.n_antennas,
        noise_only_fraction: plan.noise_only_fraction,
        curves,
        records,
    };
    write_json(&dir.join(SWEEP_SUMMARY), &summary)?;
    print_curves(out, &summary.curves)?;
    Ok(Some(summary))
}

fn fmt_db(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.0}"))
}

fn print_curves(out: &mut dyn Write, curves: &[CurveSummary]) -> Result<()> {
    writeln!(
        out,
        "{:<8} {:<15} {:>10} {:>10} {:>10} {:>10}",
        "channel", "detector", "MDR ref", "published", "FAR ref", "published"
    )?;
    for c in curves {
        writeln!(
            out,
            "{:<8} {:<15} {:>10} {:>10} {:>10} {:>10}",
            c.channel,
            c.detector,
            fmt_db(c.reference_snr_db),
            fmt_db(c.published_reference_snr_db),
            fmt_db(c.far_snr_db),
            fmt_db(c.published_far_snr_db)
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportRow<'a> {
    channel: &'a str,
    detector: &'a str,
    reference_snr_db: String,
    published_reference_snr_db: String,
    far_snr_db: String,
    published_far_snr_db: String,
}

/// Reference-SNR table from `sweep.json` plus the training summary when present.
pub fn cmd_report(cfg: &ExperimentConfig, opts: &RunOptions, out: &mut dyn Write) -> Result<()> {
    let dir = &cfg.out_dir;
    let sweep_path = dir.join(SWEEP_SUMMARY);
    if opts.dry_run {
        writeln!(out, "dry run: would summarize {}", sweep_path.display())?;
        return Ok(());
    }
    let sweep: SweepSummary = read_json(&sweep_path)?;
    let train_path = dir.join(TRAIN_SUMMARY);
    if train_path.exists() {
        let t: TrainSummary = read_json(&train_path)?;
        writeln!(out, "PCA components {} (published {})", t.k, t.published_k)?;
        writeln!(out, "validation accuracy {:.4} (published {:.3})", t.validation_accuracy, t.published_accuracy)?;
    }
    let tune_path = dir.join(TUNE_SUMMARY);
    if tune_path.exists() {
        let t: TuneSummary = read_json(&tune_path)?;
        writeln!(
            out,
            "tuning: best cross-validation error {:.4} after {} trials, point {}",
            t.best_cv_error,
            t.trials,
            serde_json::to_string(&t.best_point)?
        )?;
    }
    print_curves(out, &sweep.curves)?;

    let mut f = fs::File::create(dir.join(REPORT_FILE))?;
    writeln!(f, "# config_hash={}", sweep.config_hash)?;
    let mut w = csv::Writer::from_writer(f);
    for c in &sweep.curves {
        let s = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x}"));
        w.serialize(ReportRow {
            channel: &c.channel,
            detector: &c.detector,
            reference_snr_db: s(c.reference_snr_db),
            published_reference_snr_db: s(c.published_reference_snr_db),
            far_snr_db: s(c.far_snr_db),
            published_far_snr_db: s(c.published_far_snr_db),
        })
        .map_err(crate::metrics::csv_err)?;
    }
    w.flush()?;
    Ok(())
}
