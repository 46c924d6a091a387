//! Paired MDR/FAR sweep of the correlation detector and the PCA + SVM
//! classifier, driven through the same commands as the `prach-lab` binary.
//!
//! A reduced problem (16 preambles, AWGN, 5 dB grid) keeps this to a few
//! minutes. `configs/desk.toml` runs the 64-preamble version.
//!
//! ```text
//! cargo run --release --example sweep_comparison [OUT_DIR]
//! ```

use std::io;

use prach_lab::experiment::{self, ExperimentConfig, RunOptions, SnrGrid};
use prach_lab::zc::PrachConfig;

fn main() -> prach_lab::Result<()> {
    let mut cfg = ExperimentConfig::desk();
    cfg.prach = PrachConfig { n_preambles: 16, ..PrachConfig::default() };
    cfg.out_dir = std::env::args().nth(1).unwrap_or_else(|| "runs/sweep-example".into()).into();
    cfg.train.snr = SnrGrid { lo: -20.0, hi: 10.0, step: 5.0 };
    cfg.evaluate.snr = cfg.train.snr;
    cfg.evaluate.windows_per_point = 300;
    cfg.validate()?;

    let opts = RunOptions::default();
    let out = &mut io::stdout();
    experiment::cmd_generate(&cfg, &opts, out)?;
    experiment::cmd_train(&cfg, &opts, out)?;
    experiment::cmd_calibrate(&cfg, &opts, out)?;
    let sweep = experiment::cmd_sweep(&cfg, &opts, out)?.expect("not a dry run");

    println!();
    println!("{:>6} {:>12} {:>12} {:>12}", "SNR", "MDR analyt.", "MDR SVM", "FAR analyt.");
    let a = experiment::mdr_curve(&sweep.records, experiment::ANALYTICAL, "AWGN");
    let s = experiment::mdr_curve(&sweep.records, experiment::SVM, "AWGN");
    let f = experiment::far_curve(&sweep.records, experiment::ANALYTICAL, "AWGN");
    for ((snr, ma), ((_, ms), (_, fa))) in a.iter().zip(s.iter().zip(&f)) {
        println!("{snr:>6.1} {:>12.4} {:>12.4} {:>12.4}", ma.unwrap(), ms.unwrap(), fa.unwrap());
    }
    println!();
    experiment::cmd_report(&cfg, &opts, out)?;
    Ok(())
}
