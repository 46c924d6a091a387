//! Build the 64-preamble set for root 129 and check the correlation
//! properties the detector relies on.
//!
//! ```text
//! cargo run --example zc_preambles
//! ```

use prach_lab::zc::{cyclic_correlate, generate_root, PrachConfig, PreambleSet};

fn main() -> prach_lab::Result<()> {
    let cfg = PrachConfig::default();
    let set = PreambleSet::new(cfg)?;
    println!(
        "N = {}, u = {}, N_cs = {}: {} preambles, zone {:.2} us",
        cfg.n_zc,
        cfg.root_u,
        cfg.n_cs,
        set.len(),
        cfg.zero_correlation_zone_us()
    );

    let root = set.root();
    let modulus = root.samples().iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    println!("max | |x(n)| - 1 |      = {modulus:.2e}");

    let auto = cyclic_correlate(root, root)?;
    let side = auto.samples()[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
    println!("autocorrelation peak  = {:.3}", auto.samples()[0].norm());
    println!("largest sidelobe      = {side:.2e}");

    let other = generate_root(&PrachConfig { root_u: 130, ..cfg })?;
    let cross = cyclic_correlate(root, &other)?;
    let (lo, hi) = cross
        .samples()
        .iter()
        .map(|z| z.norm())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
    println!("cross-root |r| range  = [{lo:.6}, {hi:.6}], sqrt(N) = {:.6}", (cfg.n_zc as f64).sqrt());

    // Preamble v correlates with the root at lag C_v = v * N_cs.
    for v in [0, 1, 17, 63] {
        let r = cyclic_correlate(set.get(v)?, root)?;
        let peak = (0..r.len()).max_by(|&a, &b| r[a].norm().total_cmp(&r[b].norm())).unwrap();
        println!("preamble {v:>2}: peak at lag {peak:>3} (C_v = {})", cfg.shift(v));
    }
    Ok(())
}
