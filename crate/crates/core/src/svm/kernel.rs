use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Polynomial { degree: u32 },
    Gaussian { gamma: f64 },
    Sigmoid { alpha: f64, offset: f64 },
}

/// Kernel function with a scale `s` dividing inner products and squared distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub kind: KernelKind,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn linear(scale: f64) -> Self {
        Self { kind: KernelKind::Linear, scale }
    }

    pub fn polynomial(degree: u32, scale: f64) -> Self {
        Self { kind: KernelKind::Polynomial { degree }, scale }
    }

    /// Degree-2 polynomial.
    pub fn quadratic(scale: f64) -> Self {
        Self::polynomial(2, scale)
    }

    pub fn gaussian(gamma: f64, scale: f64) -> Self {
        Self { kind: KernelKind::Gaussian { gamma }, scale }
    }

    pub fn sigmoid(alpha: f64, offset: f64, scale: f64) -> Self {
        Self { kind: KernelKind::Sigmoid { alpha, offset }, scale }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config(format!("kernel scale {} must be positive", self.scale)));
        }
        match self.kind {
            KernelKind::Polynomial { degree } if degree < 1 => {
                Err(Error::config("polynomial degree must be at least 1"))
            }
            KernelKind::Gaussian { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::config("gaussian gamma must be positive"))
            }
            KernelKind::Sigmoid { alpha, offset } if !(alpha.is_finite() && offset.is_finite()) => {
                Err(Error::config("sigmoid parameters must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Kernel value from `x.z`, `|x|^2` and `|z|^2`.
    #[inline]
    pub fn from_dot(&self, dot: f64, norm_x: f64, norm_z: f64) -> f64 {
        let s2 = self.scale * self.scale;
        match self.kind {
            KernelKind::Linear => dot / s2,
            KernelKind::Polynomial { degree } => (1.0 + dot / s2).powi(degree as i32),
            KernelKind::Gaussian { gamma } => {
                let d2 = (norm_x + norm_z - 2.0 * dot).max(0.0);
                (-gamma * d2 / s2).exp()
            }
            KernelKind::Sigmoid { alpha, offset } => (alpha * dot / s2 + offset).tanh(),
        }
    }
}

/// Kernel value `K(x, z)`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::Shape { expected: x.len(), got: z.len() });
    }
    let s2 = spec.scale * spec.scale;
    Ok(match spec.kind {
        KernelKind::Gaussian { gamma } => {
            let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            (-gamma * d2 / s2).exp()
        }
        _ => {
            let dot = crate::linalg::dot(x, z);
            spec.from_dot(dot, 0.0, 0.0)
        }
    })
}
