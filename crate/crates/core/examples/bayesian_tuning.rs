//! Bayesian optimization against random search on two benchmark functions.
//!
//! ```text
//! cargo run --release --example bayesian_tuning
//! ```

use prach_lab::hyperopt::benchmarks::{branin, branin_space, quadratic_1d, quadratic_space, BRANIN_MIN};
use prach_lab::hyperopt::{incumbent_csv, random_search, run_optimization, Evaluation, OptConfig, Point};

fn main() -> prach_lab::Result<()> {
    let quad = |p: &Point, _| Ok(Evaluation { objective: quadratic_1d(p), runtime_s: Some(1.0) });
    let bo = run_optimization(quad, &quadratic_space(), &OptConfig::new(30, 1))?;
    println!("(x - 0.3)^2: best x = {:.4}, f = {:.2e}", bo.best_point["x"].as_real().unwrap(), bo.best_objective);
    print!("{}", incumbent_csv(&bo).lines().take(8).collect::<Vec<_>>().join("\n"));
    println!("\n...");

    let bran = |p: &Point, _| Ok(Evaluation { objective: branin(p), runtime_s: Some(1.0) });
    let mut wins = 0;
    for seed in 0..5 {
        let b = run_optimization(bran, &branin_space(), &OptConfig::new(30, seed))?;
        let r = random_search(bran, &branin_space(), &OptConfig::new(30, seed))?;
        wins += usize::from(b.best_objective < r.best_objective);
        println!("Branin seed {seed}: bayesian {:.4}, random {:.4} (optimum {BRANIN_MIN:.4})", b.best_objective, r.best_objective);
    }
    println!("bayesian search won {wins}/5");
    Ok(())
}
