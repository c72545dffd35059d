use super::SurrogateError;

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, SurrogateError> {
    if x.len() != y.len() {
        return Err(SurrogateError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(SurrogateError::TooFewPoints { need: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(SurrogateError::ZeroVariance("first series"));
    }
    if syy <= 0.0 {
        return Err(SurrogateError::ZeroVariance("second series"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Pearson correlation between pairwise Euclidean latent distances and pairwise absolute
/// fidelity gaps.
pub fn latent_fidelity_correlation(latents: &[Vec<f64>], fidelities: &[f64]) -> Result<f64, SurrogateError> {
    if latents.len() != fidelities.len() {
        return Err(SurrogateError::LengthMismatch(latents.len(), fidelities.len()));
    }
    if latents.len() < 3 {
        return Err(SurrogateError::TooFewPoints { need: 3, got: latents.len() });
    }
    let mut dist = Vec::new();
    let mut gap = Vec::new();
    for i in 0..latents.len() {
        for j in i + 1..latents.len() {
            if latents[i].len() != latents[j].len() {
                return Err(SurrogateError::LengthMismatch(latents[i].len(), latents[j].len()));
            }
            dist.push(latents[i].iter().zip(&latents[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
            gap.push((fidelities[i] - fidelities[j]).abs());
        }
    }
    if fidelities.iter().all(|&f| f == fidelities[0]) {
        return Err(SurrogateError::ZeroVariance("fidelities"));
    }
    pearson(&dist, &gap)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64, SurrogateError> {
    if pred.len() != truth.len() {
        return Err(SurrogateError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(SurrogateError::Empty);
    }
    Ok((pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64).sqrt())
}
