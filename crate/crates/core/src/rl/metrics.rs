use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fraction of `true` entries; 0 for an empty slice.
pub fn feasibility_rate(feasible: &[bool]) -> f64 {
    if feasible.is_empty() {
        return 0.0;
    }
    feasible.iter().filter(|&&f| f).count() as f64 / feasible.len() as f64
}

/// Percentile bootstrap interval for the mean of `xs` at confidence `level`.
pub fn bootstrap_mean_ci(xs: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = xs.len();
    let mut means: Vec<f64> = (0..resamples.max(1))
        .map(|_| (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * (means.len() - 1) as f64).round() as usize).min(means.len() - 1)];
    (at(tail), at(1.0 - tail))
}
