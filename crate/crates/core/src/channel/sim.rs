use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::profile::{ChannelProfile, Fading};
use crate::error::{Error, Result};
use crate::seed;
use crate::zc::{fft_forward, fft_inverse, ComplexSequence, PrachConfig, PreambleSet};

const NOISE_STREAM: u64 = 0x6E6F_6973_65;
const INTEGER_DELAY_TOL: f64 = 1e-9;

/// Block-fading gains for one PRACH occasion.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `tap_gains[antenna][tap]`.
    pub tap_gains: Vec<Vec<Complex64>>,
    pub profile: ChannelProfile,
    pub seed: u64,
}

impl ChannelRealization {
    pub fn n_antennas(&self) -> usize {
        self.tap_gains.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxScenario {
    /// `None` transmits nothing (noise-only window).
    pub preamble_index: Option<usize>,
    pub ta_us: f64,
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub n_antennas: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedWindow {
    pub per_antenna: Vec<ComplexSequence>,
    pub scenario: TxScenario,
    pub truth: Option<usize>,
}

/// Noise variance per complex sample for unit mean signal power.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

fn complex_normal<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Draw independent per-antenna tap gains.
pub fn realize(profile: &ChannelProfile, n_antennas: usize, seed: u64) -> Result<ChannelRealization> {
    if n_antennas == 0 {
        return Err(Error::config("at least one receive antenna is required"));
    }
    let tap_gains = (0..n_antennas)
        .map(|a| {
            let mut rng = seed::rng(seed::derive(seed, &[a as u64]));
            profile
                .taps()
                .iter()
                .zip(profile.powers())
                .map(|(tap, &p)| match tap.fading {
                    Fading::None => Complex64::new(p.sqrt(), 0.0),
                    Fading::Rayleigh => complex_normal(&mut rng, p),
                    Fading::Rician { k_db } => {
                        let k = 10f64.powf(k_db / 10.0);
                        let phi = rng.random::<f64>() * 2.0 * PI;
                        let los = Complex64::from_polar((k / (k + 1.0)).sqrt(), phi);
                        let diffuse = complex_normal(&mut rng, 1.0 / (k + 1.0));
                        (los + diffuse) * p.sqrt()
                    }
                })
                .collect()
        })
        .collect();
    Ok(ChannelRealization {
        tap_gains,
        profile: profile.clone(),
        seed,
    })
}

fn check_scenario(
    prach: &PrachConfig,
    preamble: Option<&ComplexSequence>,
    realization: &ChannelRealization,
    scenario: &TxScenario,
) -> Result<()> {
    if preamble.is_some() != scenario.preamble_index.is_some() {
        return Err(Error::config("preamble presence disagrees with the scenario"));
    }
    if let Some(p) = preamble {
        if p.len() != prach.n_zc {
            return Err(Error::Shape {
                expected: prach.n_zc,
                got: p.len(),
            });
        }
    }
    if realization.n_antennas() != scenario.n_antennas {
        return Err(Error::config(format!(
            "realization has {} antennas, scenario wants {}",
            realization.n_antennas(),
            scenario.n_antennas
        )));
    }
    if !(scenario.ta_us >= 0.0 && scenario.ta_us.is_finite()) {
        return Err(Error::config(format!("timing advance {} us", scenario.ta_us)));
    }
    if scenario.snr_db.is_nan() || scenario.snr_db == f64::NEG_INFINITY {
        return Err(Error::config("SNR must be finite or +inf"));
    }
    let span = (scenario.ta_us + realization.profile.max_delay_us()) / prach.sample_period_us();
    if span >= prach.n_cs as f64 {
        return Err(Error::config(format!(
            "timing advance plus delay spread ({span:.2} samples) leaves the {}-sample \
             zero-correlation zone",
            prach.n_cs
        )));
    }
    Ok(())
}

/// Apply one antenna's channel to the preamble.
///
/// A delay of `d` samples maps sample `n` to `x[n + d]`, so the correlation
/// peak against the root moves from `C_v` to `C_v + d`. Fractional delays are
/// exact phase ramps over centred subcarrier indices.
fn apply_channel(x: &ComplexSequence, gains: &[Complex64], delays: &[f64]) -> ComplexSequence {
    let n = x.len();
    let integral = delays
        .iter()
        .all(|d| (d - d.round()).abs() < INTEGER_DELAY_TOL);
    if integral {
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for (g, d) in gains.iter().zip(delays) {
            let shift = (d.round() as usize) % n;
            for (i, out) in y.iter_mut().enumerate() {
                *out += g * x[(i + shift) % n];
            }
        }
        return ComplexSequence::new(y);
    }
    // X[k] = sum_n x[n] e^{+j2pi kn/N}; Y = H X; y[n] = (1/N) sum_k Y[k] e^{-j2pi kn/N}.
    let mut spec = x.samples().to_vec();
    fft_inverse(&mut spec);
    for (k, s) in spec.iter_mut().enumerate() {
        let kc = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let h: Complex64 = gains
            .iter()
            .zip(delays)
            .map(|(g, d)| g * Complex64::from_polar(1.0, -2.0 * PI * kc * d / n as f64))
            .sum();
        *s *= h;
    }
    fft_forward(&mut spec);
    let scale = 1.0 / n as f64;
    ComplexSequence::new(spec.into_iter().map(|z| z * scale).collect())
}

/// Channel output without and with noise, per antenna.
fn components(
    prach: &PrachConfig,
    preamble: Option<&ComplexSequence>,
    realization: &ChannelRealization,
    scenario: &TxScenario,
) -> Result<Vec<(ComplexSequence, ComplexSequence)>> {
    check_scenario(prach, preamble, realization, scenario)?;
    let ts = prach.sample_period_us();
    let delays: Vec<f64> = realization
        .profile
        .taps()
        .iter()
        .map(|t| (t.delay_us + scenario.ta_us) / ts)
        .collect();
    let variance = noise_variance(scenario.snr_db);
    Ok(realization
        .tap_gains
        .iter()
        .enumerate()
        .map(|(a, gains)| {
            let clean = match preamble {
                Some(x) => apply_channel(x, gains, &delays),
                None => ComplexSequence::zeros(prach.n_zc),
            };
            let noise = if variance > 0.0 {
                let mut rng = seed::rng(seed::derive(scenario.seed, &[NOISE_STREAM, a as u64]));
                ComplexSequence::new(
                    (0..prach.n_zc)
                        .map(|_| complex_normal(&mut rng, variance))
                        .collect(),
                )
            } else {
                ComplexSequence::zeros(prach.n_zc)
            };
            (clean, noise)
        })
        .collect())
}

/// Received window `Y = H X + W` for every antenna.
///
/// Noise is white complex Gaussian with variance `10^(-snr/10)` per sample;
/// with normalized tap powers the mean post-channel signal power is one.
pub fn transmit(
    prach: &PrachConfig,
    preamble: Option<&ComplexSequence>,
    realization: &ChannelRealization,
    scenario: &TxScenario,
) -> Result<ReceivedWindow> {
    let noiseless = noise_variance(scenario.snr_db) == 0.0;
    let per_antenna = components(prach, preamble, realization, scenario)?
        .into_iter()
        .map(|(clean, noise)| {
            if noiseless {
                clean
            } else {
                ComplexSequence::new(
                    clean
                        .samples()
                        .iter()
                        .zip(noise.samples())
                        .map(|(c, w)| c + w)
                        .collect(),
                )
            }
        })
        .collect();
    Ok(ReceivedWindow {
        per_antenna,
        scenario: *scenario,
        truth: scenario.preamble_index,
    })
}

/// One occasion from a window seed: a fresh realization (sub-seed 1) and
/// fresh noise (sub-seed 2). `truth = None` sends nothing.
#[allow(clippy::too_many_arguments)]
pub fn simulate_window(
    preambles: &PreambleSet,
    profile: &ChannelProfile,
    truth: Option<usize>,
    ta_us: f64,
    snr_db: f64,
    n_antennas: usize,
    window_seed: u64,
) -> Result<ReceivedWindow> {
    let realization = realize(profile, n_antennas, seed::derive(window_seed, &[1]))?;
    let scenario = TxScenario {
        preamble_index: truth,
        ta_us: if truth.is_some() { ta_us } else { 0.0 },
        snr_db,
        n_antennas,
        seed: seed::derive(window_seed, &[2]),
    };
    let x = truth.map(|v| preambles.get(v)).transpose()?;
    transmit(preambles.config(), x, &realization, &scenario)
}

/// Empirical post-channel SNR in dB over `n_windows` generated windows.
///
/// Each window carries a random preamble through a fresh realization. Returns
/// `f64::INFINITY` when noise is disabled.
pub fn snr_calibration_check(
    prach: &PrachConfig,
    profile: &ChannelProfile,
    snr_db: f64,
    ta_us: f64,
    n_windows: usize,
    seed: u64,
) -> Result<f64> {
    if n_windows < 1000 {
        return Err(Error::config("SNR calibration needs at least 1000 windows"));
    }
    if noise_variance(snr_db) == 0.0 {
        return Ok(f64::INFINITY);
    }
    let set = crate::zc::PreambleSet::new(*prach)?;
    let (mut signal, mut noise) = (0.0, 0.0);
    for w in 0..n_windows {
        let wseed = seed::derive(seed, &[w as u64]);
        let v = seed::rng(wseed).random_range(0..prach.n_preambles);
        let realization = realize(profile, 1, seed::derive(wseed, &[1]))?;
        let scenario = TxScenario {
            preamble_index: Some(v),
            ta_us,
            snr_db,
            n_antennas: 1,
            seed: seed::derive(wseed, &[2]),
        };
        for (clean, w) in components(prach, Some(set.get(v)?), &realization, &scenario)? {
            signal += clean.samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
            noise += w.samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    Ok(10.0 * (signal / noise).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zc::{cyclic_correlate, PreambleSet};

    fn scenario(v: Option<usize>, snr_db: f64, ta_us: f64, n_antennas: usize) -> TxScenario {
        TxScenario {
            preamble_index: v,
            ta_us,
            snr_db,
            n_antennas,
            seed: 11,
        }
    }

    #[test]
    fn awgn_gains_are_exactly_one() {
        let r = realize(&ChannelProfile::awgn(), 2, 5).unwrap();
        assert_eq!(r.tap_gains, vec![vec![Complex64::new(1.0, 0.0)]; 2]);
    }

    #[test]
    fn realization_is_deterministic() {
        let epa = ChannelProfile::builtin("EPA").unwrap();
        assert_eq!(realize(&epa, 2, 9).unwrap(), realize(&epa, 2, 9).unwrap());
        assert_ne!(realize(&epa, 2, 9).unwrap(), realize(&epa, 2, 10).unwrap());
    }

    #[test]
    fn rayleigh_power_is_normalized_on_average() {
        for name in ["EPA", "ETU", "TDLD30"] {
            let p = ChannelProfile::builtin(name).unwrap();
            let n = 10_000;
            let mean: f64 = (0..n)
                .map(|s| {
                    realize(&p, 1, s).unwrap().tap_gains[0]
                        .iter()
                        .map(|g| g.norm_sqr())
                        .sum::<f64>()
                })
                .sum::<f64>()
                / n as f64;
            assert!((mean - 1.0).abs() < 0.02, "{name}: {mean}");
        }
    }

    #[test]
    fn frequency_response_energy_is_conserved() {
        // mean_k |H[k]|^2 over centred subcarriers equals sum |g|^2 for any delays.
        let prach = PrachConfig::default();
        let p = ChannelProfile::builtin("EVA").unwrap();
        let ts = prach.sample_period_us();
        let n = prach.n_zc;
        let mut acc = 0.0;
        let reps = 2_000;
        for s in 0..reps {
            let g = &realize(&p, 1, s).unwrap().tap_gains[0];
            let mut e = 0.0;
            for k in 0..n {
                let kc = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                let h: Complex64 = g
                    .iter()
                    .zip(p.taps())
                    .map(|(g, t)| g * Complex64::from_polar(1.0, -2.0 * PI * kc * t.delay_us / ts / n as f64))
                    .sum();
                e += h.norm_sqr();
            }
            acc += e / n as f64;
        }
        assert!((acc / reps as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn noiseless_awgn_is_identity() {
        let prach = PrachConfig::default();
        let set = PreambleSet::new(prach).unwrap();
        let r = realize(&ChannelProfile::awgn(), 1, 0).unwrap();
        let x = set.get(17).unwrap();
        let w = transmit(&prach, Some(x), &r, &scenario(Some(17), f64::INFINITY, 0.0, 1)).unwrap();
        assert_eq!(&w.per_antenna[0], x);
        assert_eq!(w.truth, Some(17));
    }

    #[test]
    fn timing_advance_moves_the_correlation_peak_forward() {
        let prach = PrachConfig::default();
        let set = PreambleSet::new(prach).unwrap();
        let r = realize(&ChannelProfile::awgn(), 1, 0).unwrap();
        let ta = 5.0 * prach.sample_period_us();
        let w = transmit(&prach, Some(set.get(3).unwrap()), &r, &scenario(Some(3), f64::INFINITY, ta, 1)).unwrap();
        let corr = cyclic_correlate(&w.per_antenna[0], set.root()).unwrap();
        let peak = (0..prach.n_zc)
            .max_by(|&a, &b| corr[a].norm().total_cmp(&corr[b].norm()))
            .unwrap();
        assert_eq!(peak, 3 * 13 + 5);
    }

    #[test]
    fn fractional_and_integer_paths_agree() {
        let x = PreambleSet::new(PrachConfig::default()).unwrap().get(2).unwrap().clone();
        let g = [Complex64::new(0.6, -0.2), Complex64::new(0.1, 0.3)];
        let direct = apply_channel(&x, &g, &[1.0, 4.0]);
        // Nudging the delays off-integer forces the transform path.
        let spectral = apply_channel(&x, &g, &[1.0 + 1e-7, 4.0 + 1e-7]);
        for (a, b) in direct.samples().iter().zip(spectral.samples()) {
            assert!((a - b).norm() < 1e-5);
        }
    }

    #[test]
    fn noise_only_window_has_the_target_variance() {
        let prach = PrachConfig::default();
        let r = realize(&ChannelProfile::awgn(), 1, 0).unwrap();
        let mut total = 0.0;
        let mut count = 0usize;
        for s in 0..120u64 {
            let sc = TxScenario { seed: s, ..scenario(None, 3.0, 0.0, 1) };
            let w = transmit(&prach, None, &r, &sc).unwrap();
            assert_eq!(w.truth, None);
            total += w.per_antenna[0].samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += prach.n_zc;
        }
        let var = total / count as f64;
        let expected = noise_variance(3.0);
        assert!(count >= 100_000);
        assert!((var / expected - 1.0).abs() < 0.01, "{var} vs {expected}");
    }

    #[test]
    fn zone_overflow_is_rejected() {
        let prach = PrachConfig::default();
        let etu = ChannelProfile::builtin("ETU").unwrap();
        let r = realize(&etu, 1, 0).unwrap();
        let set = PreambleSet::new(prach).unwrap();
        let err = transmit(&prach, Some(set.get(0).unwrap()), &r, &scenario(Some(0), 0.0, 8.0, 1));
        assert!(matches!(err, Err(Error::Config(_))));
        let mismatch = transmit(&prach, None, &r, &scenario(Some(0), 0.0, 0.0, 1));
        assert!(mismatch.is_err());
    }

    #[test]
    fn identical_inputs_give_identical_windows() {
        let prach = PrachConfig::default();
        let set = PreambleSet::new(prach).unwrap();
        let p = ChannelProfile::builtin("TDLC300").unwrap();
        let r = realize(&p, 2, 4).unwrap();
        let sc = scenario(Some(9), -3.0, 1.0, 2);
        let a = transmit(&prach, Some(set.get(9).unwrap()), &r, &sc).unwrap();
        let b = transmit(&prach, Some(set.get(9).unwrap()), &r, &sc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn calibration_check_tracks_target() {
        let prach = PrachConfig::default();
        let awgn = ChannelProfile::awgn();
        for target in [-20.0, 0.0] {
            let m = snr_calibration_check(&prach, &awgn, target, 0.0, 1000, 3).unwrap();
            assert!((m - target).abs() < 0.1, "{target}: {m}");
        }
        let off = snr_calibration_check(&prach, &awgn, f64::INFINITY, 0.0, 1000, 3).unwrap();
        assert_eq!(off, f64::INFINITY);
        assert!(snr_calibration_check(&prach, &awgn, 0.0, 0.0, 10, 3).is_err());
    }
}
