//! Print the bundled channel profiles, pass one preamble through each and
//! check the empirical SNR of the simulator.
//!
//! ```text
//! cargo run --release --example channel_models
//! ```

use prach_lab::channel::{simulate_window, snr_calibration_check, ProfileLibrary, BUILTIN_PROFILES};
use prach_lab::detector::compute_pdp;
use prach_lab::zc::{PrachConfig, PreambleSet};

fn main() -> prach_lab::Result<()> {
    let prach = PrachConfig::default();
    let set = PreambleSet::new(prach)?;
    let lib = ProfileLibrary::new(None);

    for name in BUILTIN_PROFILES {
        let p = lib.get(name)?;
        println!(
            "{name:<8} {} taps, max delay {:>5.2} us, Doppler {:>5.1} Hz",
            p.taps().len(),
            p.max_delay_us(),
            p.doppler_hz()
        );
    }

    // Preamble 5 at 20 dB: the PDP peak lands in zone 5, spread by the delay profile.
    println!();
    for name in BUILTIN_PROFILES {
        let p = lib.get(name)?;
        let w = simulate_window(&set, &p, Some(5), 2.0, 20.0, 1, 7)?;
        let pdp = compute_pdp(&w, &set)?;
        let peak = (0..pdp.bins.len()).max_by(|&a, &b| pdp.bins[a].total_cmp(&pdp.bins[b])).unwrap();
        println!("{name:<8} PDP peak at bin {peak} (zone {})", peak / prach.n_cs);
    }

    println!();
    // Fading channels match only on average over many realizations.
    for name in ["AWGN", "EPA"] {
        for snr in [-20.0, 0.0, 20.0] {
            let measured = snr_calibration_check(&prach, &lib.get(name)?, snr, 2.0, 5000, 3)?;
            println!("{name:<5} target {snr:>5.1} dB -> measured {measured:>7.3} dB");
        }
    }
    Ok(())
}
