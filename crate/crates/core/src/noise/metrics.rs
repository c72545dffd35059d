use super::{DensityMatrix, NoiseError, StateVector};

const SUPPORT: f64 = 1e-12;

fn check(ideal: &StateVector, rho: &DensityMatrix) -> Result<(), NoiseError> {
    if ideal.dim() != rho.dim() {
        return Err(NoiseError::DimensionMismatch(format!(
            "ideal state has dimension {} but density matrix has {}",
            ideal.dim(),
            rho.dim()
        )));
    }
    Ok(())
}

/// Probability mass the noisy state puts on outcomes the ideal state can produce.
pub fn pst(ideal: &StateVector, rho: &DensityMatrix) -> Result<f64, NoiseError> {
    check(ideal, rho)?;
    let mass: f64 = ideal
        .amplitudes()
        .iter()
        .zip(rho.diagonal())
        .filter(|(a, _)| a.norm_sqr() > SUPPORT)
        .map(|(_, p)| p)
        .sum();
    Ok(mass.clamp(0.0, 1.0))
}

/// Squared Bhattacharyya overlap of the two computational-basis distributions.
pub fn hf(ideal: &StateVector, rho: &DensityMatrix) -> Result<f64, NoiseError> {
    check(ideal, rho)?;
    let overlap: f64 =
        ideal.amplitudes().iter().zip(rho.diagonal()).map(|(a, q)| (a.norm_sqr() * q.max(0.0)).sqrt()).sum();
    Ok((overlap * overlap).clamp(0.0, 1.0))
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn pf(ideal: &StateVector, rho: &DensityMatrix) -> Result<f64, NoiseError> {
    check(ideal, rho)?;
    let v = rho.expectation(ideal);
    debug_assert!(v.im.abs() < 1e-10, "overlap has imaginary part {}", v.im);
    Ok(v.re.clamp(0.0, 1.0))
}
