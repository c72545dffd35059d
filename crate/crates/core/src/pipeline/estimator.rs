use serde::{Deserialize, Serialize};

use crate::circuit::CircuitTable;
use crate::embed::Autoencoder;
use crate::route::{FidelityEstimator, RouteError};
use crate::surrogate::{GpModel, SurrogateError, SurrogateFile};

/// Trained surrogate as stored on disk: the GP plus the per-dimension affine map applied
/// to latents before they reach it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateArtifact {
    pub gp: SurrogateFile,
    pub latent_shift: Vec<f64>,
    pub latent_scale: Vec<f64>,
}

impl SurrogateArtifact {
    /// Per-dimension mean and standard deviation of `latents`; constant dimensions keep
    /// unit scale.
    pub fn standardizer(latents: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let d = latents.first().map_or(0, Vec::len);
        let n = latents.len().max(1) as f64;
        (0..d)
            .map(|j| {
                let mean = latents.iter().map(|z| z[j]).sum::<f64>() / n;
                let var = latents.iter().map(|z| (z[j] - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                (mean, if sd > 1e-12 { sd } else { 1.0 })
            })
            .unzip()
    }

    pub fn identity(width: usize) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; width], vec![1.0; width])
    }
}

pub(crate) fn transform(z: &[f64], shift: &[f64], scale: &[f64]) -> Vec<f64> {
    z.iter().zip(shift).zip(scale).map(|((v, m), s)| (v - m) / s).collect()
}

/// Fidelity estimate of a circuit: encode, map, GP posterior mean, clipped to [0, 1].
#[derive(Clone, Debug)]
pub struct LatentSurrogate {
    encoder: Autoencoder,
    gp: GpModel,
    shift: Vec<f64>,
    scale: Vec<f64>,
}

impl LatentSurrogate {
    pub fn new(encoder: Autoencoder, artifact: SurrogateArtifact) -> Result<Self, SurrogateError> {
        let w = encoder.latent_width();
        if artifact.latent_shift.len() != w || artifact.latent_scale.len() != w {
            return Err(SurrogateError::LengthMismatch(artifact.latent_shift.len(), w));
        }
        let gp = GpModel::from_file(artifact.gp)?;
        Ok(LatentSurrogate { encoder, gp, shift: artifact.latent_shift, scale: artifact.latent_scale })
    }

    pub fn gp(&self) -> &GpModel {
        &self.gp
    }

    pub fn predict(&self, table: &CircuitTable) -> Result<f64, RouteError> {
        let z = self.encoder.encode(table).map_err(|e| RouteError::Estimator(e.to_string()))?;
        let m = self
            .gp
            .predict_mean(&transform(&z, &self.shift, &self.scale))
            .map_err(|e| RouteError::Estimator(e.to_string()))?;
        Ok(m.clamp(0.0, 1.0))
    }
}

impl FidelityEstimator for LatentSurrogate {
    fn estimate(&self, table: &CircuitTable) -> Result<f64, RouteError> {
        self.predict(table)
    }
}
