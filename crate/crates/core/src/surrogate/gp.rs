use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{Kernel, KernelKind, SurrogateError};

/// Added to the diagonal when the label-noise variance is zero.
const JITTER: f64 = 1e-10;

pub(crate) fn factor(kernel: &Kernel, zs: &[Vec<f64>], gamma2: f64) -> Result<Cholesky<f64, Dyn>, SurrogateError> {
    let n = zs.len();
    let mut k = DMatrix::from_row_slice(n, n, &kernel.gram(zs));
    let noise = if gamma2 > 0.0 { gamma2 } else { JITTER };
    for i in 0..n {
        k[(i, i)] += noise;
    }
    k.cholesky().ok_or_else(|| SurrogateError::NotPositiveDefinite(format!("{kernel:?} with gamma2 {gamma2}")))
}

/// Zero-mean GP posterior conditioned on `(inputs, outputs)`.
#[derive(Clone, Debug)]
pub struct GpModel {
    kernel: Kernel,
    gamma2: f64,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
}

/// Serialized form of a fitted surrogate; the factorization is rebuilt on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFile {
    pub kernel: Kernel,
    pub gamma2: f64,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
}

pub fn gp_fit(inputs: Vec<Vec<f64>>, outputs: Vec<f64>, gamma2: f64, kernel: Kernel) -> Result<GpModel, SurrogateError> {
    kernel.validate()?;
    if inputs.is_empty() {
        return Err(SurrogateError::Empty);
    }
    if inputs.len() != outputs.len() {
        return Err(SurrogateError::LengthMismatch(inputs.len(), outputs.len()));
    }
    let d = inputs[0].len();
    if let Some(z) = inputs.iter().find(|z| z.len() != d) {
        return Err(SurrogateError::LengthMismatch(d, z.len()));
    }
    if !(gamma2 >= 0.0 && gamma2.is_finite()) {
        return Err(SurrogateError::InvalidHyper(format!("gamma2 {gamma2}")));
    }
    let chol = factor(&kernel, &inputs, gamma2)?;
    let weights = chol.solve(&DVector::from_column_slice(&outputs));
    Ok(GpModel { kernel, gamma2, inputs, outputs, chol, weights })
}

impl GpModel {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn latent_width(&self) -> usize {
        self.inputs[0].len()
    }

    fn cross(&self, z: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.inputs.len(), self.inputs.iter().map(|x| self.kernel.eval_unchecked(x, z)))
    }

    /// Posterior mean and variance at `z`; the variance is clamped at zero.
    pub fn predict(&self, z: &[f64]) -> Result<(f64, f64), SurrogateError> {
        if z.len() != self.latent_width() {
            return Err(SurrogateError::LengthMismatch(self.latent_width(), z.len()));
        }
        let ks = self.cross(z);
        let mean = ks.dot(&self.weights);
        let v = self.chol.l().solve_lower_triangular(&ks).expect("triangular factor");
        let var = self.kernel.eval_unchecked(z, z) - v.norm_squared();
        Ok((mean, var.max(0.0)))
    }

    pub fn predict_mean(&self, z: &[f64]) -> Result<f64, SurrogateError> {
        if z.len() != self.latent_width() {
            return Err(SurrogateError::LengthMismatch(self.latent_width(), z.len()));
        }
        Ok(self.cross(z).dot(&self.weights))
    }

    /// `-u' K^-1 u / 2 - log|K| / 2 - n log(2 pi) / 2` with `K` including label noise.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.outputs.len() as f64;
        let u = DVector::from_column_slice(&self.outputs);
        let log_det: f64 = 2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        -0.5 * u.dot(&self.weights) - 0.5 * log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    pub fn to_file(&self) -> SurrogateFile {
        SurrogateFile { kernel: self.kernel, gamma2: self.gamma2, inputs: self.inputs.clone(), outputs: self.outputs.clone() }
    }

    pub fn from_file(f: SurrogateFile) -> Result<Self, SurrogateError> {
        gp_fit(f.inputs, f.outputs, f.gamma2, f.kernel)
    }
}

/// Log-spaced hyperparameter grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub lengthscales: Vec<f64>,
    pub variances: Vec<f64>,
    pub gamma2s: Vec<f64>,
    pub alphas: Vec<f64>,
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            lengthscales: log_space(1e-2, 1e2, 9),
            variances: log_space(1e-2, 1e1, 7),
            gamma2s: log_space(1e-6, 1e-2, 5),
            alphas: vec![0.5, 2.0, 8.0],
        }
    }
}

impl HyperGrid {
    /// Candidate kernels of one kind. Poly reuses the variance grid for its offset; MLP
    /// uses `1 / lengthscale^2` as the weight variance with unit bias variance.
    pub fn kernels(&self, kind: KernelKind) -> Vec<Kernel> {
        let mut out = Vec::new();
        match kind {
            KernelKind::Poly => out.extend(self.variances.iter().map(|&c| Kernel::Poly { degree: 2, offset: c })),
            _ => {
                for &l in &self.lengthscales {
                    for &v in &self.variances {
                        match kind {
                            KernelKind::Exponential => out.push(Kernel::Exponential { variance: v, lengthscale: l }),
                            KernelKind::Rbf => out.push(Kernel::Rbf { variance: v, lengthscale: l }),
                            KernelKind::Mlp => out.push(Kernel::Mlp { variance: v, weight: 1.0 / (l * l), bias: 1.0 }),
                            KernelKind::RatQuad => out.extend(
                                self.alphas.iter().map(|&a| Kernel::RatQuad { variance: v, lengthscale: l, alpha: a }),
                            ),
                            KernelKind::Poly => unreachable!(),
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub kernel: Kernel,
    pub gamma2: f64,
    pub log_marginal_likelihood: f64,
    pub candidates: usize,
}

/// Grid search maximizing the log marginal likelihood. Candidates whose covariance fails
/// to factor are skipped; ties keep the first candidate in grid order.
pub fn fit_hyperparameters(
    inputs: &[Vec<f64>],
    outputs: &[f64],
    kind: KernelKind,
    grid: &HyperGrid,
) -> Result<(GpModel, FitReport), SurrogateError> {
    let mut best: Option<(GpModel, f64)> = None;
    let mut candidates = 0;
    for kernel in grid.kernels(kind) {
        for &g2 in &grid.gamma2s {
            candidates += 1;
            let Ok(model) = gp_fit(inputs.to_vec(), outputs.to_vec(), g2, kernel) else { continue };
            let lml = model.log_marginal_likelihood();
            if lml.is_finite() && best.as_ref().is_none_or(|(_, b)| lml > *b) {
                best = Some((model, lml));
            }
        }
    }
    let (model, lml) = best.ok_or_else(|| SurrogateError::NotPositiveDefinite(format!("every {} candidate", kind.name())))?;
    let report = FitReport { kernel: model.kernel, gamma2: model.gamma2, log_marginal_likelihood: lml, candidates };
    Ok((model, report))
}
