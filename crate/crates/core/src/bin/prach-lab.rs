//! Command-line front end for the experiment commands.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prach_lab::experiment::{self, ExperimentConfig, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "prach-lab", version, about = "PRACH preamble detection experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML); full-size defaults when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print what would be done without writing anything
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the training set
    Generate,
    /// Fit PCA and the SVM, report validation accuracy
    Train,
    /// Bayesian search over SVM settings
    Tune {
        /// Continue from an existing trial log
        #[arg(long)]
        resume: bool,
    },
    /// Calibrate analytical detector thresholds per channel
    Calibrate {
        /// Noise-only windows per channel
        #[arg(long)]
        windows: Option<usize>,
    },
    /// MDR/FAR versus SNR for both detectors
    Sweep {
        /// Directory holding pca.bin and svm.bin
        #[arg(long)]
        models: Option<PathBuf>,
        /// Noise-only windows per channel if calibration is needed
        #[arg(long)]
        windows: Option<usize>,
    },
    /// Summarize a finished sweep
    Report,
}

fn run(cli: Cli) -> prach_lab::Result<()> {
    let mut cfg = match &cli.common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.common.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.common.out {
        cfg.out_dir = o;
    }
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| prach_lab::Error::Config(e.to_string()))?;
    }
    let mut opts = RunOptions { dry_run: cli.common.dry_run, ..RunOptions::default() };
    let stdout = io::stdout();
    let out: &mut dyn Write = &mut stdout.lock();
    match cli.command {
        Command::Generate => {
            experiment::cmd_generate(&cfg, &opts, out)?;
        }
        Command::Train => {
            experiment::cmd_train(&cfg, &opts, out)?;
        }
        Command::Tune { resume } => {
            opts.resume = resume;
            experiment::cmd_tune(&cfg, &opts, out)?;
        }
        Command::Calibrate { windows } => {
            opts.calibration_windows = windows;
            experiment::cmd_calibrate(&cfg, &opts, out)?;
        }
        Command::Sweep { models, windows } => {
            opts.models_dir = models;
            opts.calibration_windows = windows;
            experiment::cmd_sweep(&cfg, &opts, out)?;
        }
        Command::Report => experiment::cmd_report(&cfg, &opts, out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
