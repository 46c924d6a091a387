//! Zadoff-Chu roots, the cyclic-shift preamble set and cyclic correlation.
//!
//! Long format 0 uses an 839-point root `x_u(n) = exp(-j*pi*u*n*(n+1)/N)`.
//! Preamble `v` is the root read from offset `C_v = v * n_cs`, so the
//! correlation of preamble `v` against the root peaks at lag `C_v`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::Index;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Duration of the format-0 sequence part (1.25 kHz subcarrier spacing).
pub const SEQUENCE_DURATION_US: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrachConfig {
    pub n_zc: usize,
    pub root_u: usize,
    pub n_cs: usize,
    pub n_preambles: usize,
}

impl Default for PrachConfig {
    fn default() -> Self {
        Self {
            n_zc: 839,
            root_u: 129,
            n_cs: 13,
            n_preambles: 64,
        }
    }
}

impl PrachConfig {
    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.n_zc) {
            return Err(Error::config(format!("n_zc = {} is not prime", self.n_zc)));
        }
        if self.root_u == 0 || self.root_u >= self.n_zc {
            return Err(Error::config(format!(
                "root_u = {} outside 1..{}",
                self.root_u,
                self.n_zc - 1
            )));
        }
        if gcd(self.root_u, self.n_zc) != 1 {
            return Err(Error::config(format!(
                "root_u = {} shares a factor with n_zc = {}",
                self.root_u, self.n_zc
            )));
        }
        if self.n_cs == 0 || self.n_preambles == 0 {
            return Err(Error::config("n_cs and n_preambles must be positive"));
        }
        if self.n_preambles * self.n_cs > self.n_zc {
            return Err(Error::config(format!(
                "{} preambles x n_cs {} do not fit in {} samples",
                self.n_preambles, self.n_cs, self.n_zc
            )));
        }
        Ok(())
    }

    /// Cyclic shift `C_v` of preamble `v`.
    pub fn shift(&self, v: usize) -> usize {
        v * self.n_cs
    }

    /// Duration of one sequence sample in microseconds.
    pub fn sample_period_us(&self) -> f64 {
        SEQUENCE_DURATION_US / self.n_zc as f64
    }

    /// Width of each preamble's zero-correlation zone in microseconds.
    pub fn zero_correlation_zone_us(&self) -> f64 {
        self.n_cs as f64 * self.sample_period_us()
    }
}

/// A complex sequence in the PRACH sequence domain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexSequence(Vec<Complex64>);

impl ComplexSequence {
    pub fn new(samples: Vec<Complex64>) -> Self {
        Self(samples)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.0
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// Sequence whose sample `n` is `self[(n + shift) mod N]`.
    pub fn cyclic_shift(&self, shift: usize) -> Self {
        let n = self.len();
        if n == 0 {
            return self.clone();
        }
        let s = shift % n;
        Self((0..n).map(|i| self.0[(i + s) % n]).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|z| z * c).collect())
    }

    pub fn mean_power(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.0.len() as f64
    }
}

impl Index<usize> for ComplexSequence {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl From<Vec<Complex64>> for ComplexSequence {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

/// Root Zadoff-Chu sequence for `config.root_u`.
pub fn generate_root(config: &PrachConfig) -> Result<ComplexSequence> {
    config.validate()?;
    let n = config.n_zc as u64;
    let u = config.root_u as u64;
    let modulus = 2 * n;
    // u*n*(n+1) tracked exactly modulo 2N: consecutive terms differ by 2*u*n.
    let mut phase = 0u64;
    let mut out = Vec::with_capacity(config.n_zc);
    for k in 0..n {
        if k > 0 {
            phase = (phase + (2 * u % modulus) * k % modulus) % modulus;
        }
        let angle = -PI * phase as f64 / n as f64;
        let (s, c) = angle.sin_cos();
        out.push(Complex64::new(c, s));
    }
    Ok(ComplexSequence(out))
}

/// Preamble `v`: the root cyclically shifted by `v * n_cs`.
pub fn preamble(config: &PrachConfig, v: usize) -> Result<ComplexSequence> {
    if v >= config.n_preambles {
        return Err(Error::Index {
            index: v,
            limit: config.n_preambles,
        });
    }
    Ok(generate_root(config)?.cyclic_shift(config.shift(v)))
}

/// All preambles of one configuration, indexed by preamble number.
#[derive(Debug, Clone)]
pub struct PreambleSet {
    config: PrachConfig,
    root: ComplexSequence,
    sequences: Vec<ComplexSequence>,
}

impl PreambleSet {
    pub fn new(config: PrachConfig) -> Result<Self> {
        let root = generate_root(&config)?;
        let sequences = (0..config.n_preambles)
            .map(|v| root.cyclic_shift(config.shift(v)))
            .collect();
        Ok(Self {
            config,
            root,
            sequences,
        })
    }

    pub fn config(&self) -> &PrachConfig {
        &self.config
    }

    pub fn root(&self) -> &ComplexSequence {
        &self.root
    }

    pub fn get(&self, v: usize) -> Result<&ComplexSequence> {
        self.sequences.get(v).ok_or(Error::Index {
            index: v,
            limit: self.sequences.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplexSequence> {
        self.sequences.iter()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT, `X[k] = sum_n x[n] exp(-j 2 pi k n / N)`, unnormalized.
pub fn fft_forward(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

/// In-place inverse DFT with the `exp(+j ...)` kernel, unnormalized.
pub fn fft_inverse(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

/// `r[tau] = sum_n a[n] * conj(b[(n + tau) mod N])`, evaluated with FFTs.
pub fn cyclic_correlate(a: &ComplexSequence, b: &ComplexSequence) -> Result<ComplexSequence> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    if n == 0 {
        return Ok(ComplexSequence::default());
    }
    let mut fa = a.0.clone();
    let mut fb = b.0.clone();
    fft_forward(&mut fa);
    fft_forward(&mut fb);
    // conj(r) is the circular correlation of b against a: IDFT(B * conj(A)).
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = y * x.conj();
    }
    fft_inverse(&mut fa);
    let scale = 1.0 / n as f64;
    Ok(ComplexSequence(fa.into_iter().map(|z| z.conj() * scale).collect()))
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}
