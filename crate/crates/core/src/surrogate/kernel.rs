use serde::{Deserialize, Serialize};

use super::SurrogateError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Exponential,
    Rbf,
    Poly,
    Mlp,
    RatQuad,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [KernelKind::Exponential, KernelKind::Rbf, KernelKind::Poly, KernelKind::Mlp, KernelKind::RatQuad];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Exponential => "exponential",
            KernelKind::Rbf => "rbf",
            KernelKind::Poly => "poly",
            KernelKind::Mlp => "mlp",
            KernelKind::RatQuad => "ratquad",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = SurrogateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| SurrogateError::InvalidHyper(format!("unknown kernel {s}")))
    }
}

/// Covariance function with its hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    /// `variance * exp(-|d| / lengthscale)`
    Exponential { variance: f64, lengthscale: f64 },
    /// `variance * exp(-|d|^2 / (2 lengthscale^2))`
    Rbf { variance: f64, lengthscale: f64 },
    /// `(offset + a.b)^degree`
    Poly { degree: u32, offset: f64 },
    /// Arcsine kernel of an infinitely wide one-layer network.
    Mlp { variance: f64, weight: f64, bias: f64 },
    /// `variance * (1 + |d|^2 / (2 alpha lengthscale^2))^-alpha`
    RatQuad { variance: f64, lengthscale: f64, alpha: f64 },
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Kernel {
    /// Unit-scale defaults used before any fitting.
    pub fn default_for(kind: KernelKind) -> Self {
        match kind {
            KernelKind::Exponential => Kernel::Exponential { variance: 1.0, lengthscale: 1.0 },
            KernelKind::Rbf => Kernel::Rbf { variance: 1.0, lengthscale: 1.0 },
            KernelKind::Poly => Kernel::Poly { degree: 2, offset: 1.0 },
            KernelKind::Mlp => Kernel::Mlp { variance: 1.0, weight: 1.0, bias: 1.0 },
            KernelKind::RatQuad => Kernel::RatQuad { variance: 1.0, lengthscale: 1.0, alpha: 1.0 },
        }
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            Kernel::Exponential { .. } => KernelKind::Exponential,
            Kernel::Rbf { .. } => KernelKind::Rbf,
            Kernel::Poly { .. } => KernelKind::Poly,
            Kernel::Mlp { .. } => KernelKind::Mlp,
            Kernel::RatQuad { .. } => KernelKind::RatQuad,
        }
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        let ok = match *self {
            Kernel::Exponential { variance, lengthscale } | Kernel::Rbf { variance, lengthscale } => variance > 0.0 && lengthscale > 0.0,
            Kernel::Poly { degree, offset } => degree >= 1 && offset >= 0.0,
            Kernel::Mlp { variance, weight, bias } => variance > 0.0 && weight > 0.0 && bias >= 0.0,
            Kernel::RatQuad { variance, lengthscale, alpha } => variance > 0.0 && lengthscale > 0.0 && alpha > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SurrogateError::InvalidHyper(format!("{self:?}")))
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64, SurrogateError> {
        if a.len() != b.len() {
            return Err(SurrogateError::LengthMismatch(a.len(), b.len()));
        }
        Ok(self.eval_unchecked(a, b))
    }

    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Exponential { variance, lengthscale } => variance * (-sq_dist(a, b).sqrt() / lengthscale).exp(),
            Kernel::Rbf { variance, lengthscale } => variance * (-sq_dist(a, b) / (2.0 * lengthscale * lengthscale)).exp(),
            Kernel::Poly { degree, offset } => (offset + dot(a, b)).powi(degree as i32),
            Kernel::Mlp { variance, weight, bias } => {
                let num = weight * dot(a, b) + bias;
                let den = ((weight * dot(a, a) + bias + 1.0) * (weight * dot(b, b) + bias + 1.0)).sqrt();
                2.0 * variance / std::f64::consts::PI * (num / den).clamp(-1.0, 1.0).asin()
            }
            Kernel::RatQuad { variance, lengthscale, alpha } => {
                variance * (1.0 + sq_dist(a, b) / (2.0 * alpha * lengthscale * lengthscale)).powf(-alpha)
            }
        }
    }

    /// Row-major Gram matrix of `zs` against `zs`.
    pub fn gram(&self, zs: &[Vec<f64>]) -> Vec<f64> {
        let n = zs.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(&zs[i], &zs[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}
