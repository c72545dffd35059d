use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Kernel, SurrogateError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub n_select: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl SelectionConfig {
    pub fn validate(&self, pool: usize) -> Result<(), SurrogateError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SurrogateError::InvalidConfig(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        if self.n_select == 0 {
            return Err(SurrogateError::InvalidConfig("n_select must be at least 1".into()));
        }
        if pool < self.n_select {
            return Err(SurrogateError::PoolTooSmall { pool, wanted: self.n_select });
        }
        Ok(())
    }
}

/// `ceil((n / n_select) * ln(1 / epsilon))` candidates per greedy step.
pub fn sample_count(n: usize, n_select: usize, epsilon: f64) -> usize {
    ((n as f64 / n_select as f64) * (1.0 / epsilon).ln()).ceil() as usize
}

/// `log|I + K / gamma2| / 2`; zero for the empty set.
pub fn informativeness(zs: &[Vec<f64>], kernel: &Kernel, gamma2: f64) -> Result<f64, SurrogateError> {
    if zs.is_empty() {
        return Ok(0.0);
    }
    if !(gamma2 > 0.0) {
        return Err(SurrogateError::InvalidHyper(format!("gamma2 {gamma2} must be positive")));
    }
    let n = zs.len();
    let mut m = DMatrix::from_row_slice(n, n, &kernel.gram(zs)) / gamma2;
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    let chol = m.cholesky().ok_or_else(|| SurrogateError::NotPositiveDefinite(format!("{kernel:?}")))?;
    Ok(chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum())
}

/// Incremental posterior variance under label noise `gamma2`, via a growing Cholesky
/// factor of `K_A + gamma2 I`.
struct Conditioner<'a> {
    kernel: &'a Kernel,
    gamma2: f64,
    chosen: Vec<usize>,
    // lower-triangular rows
    l: Vec<Vec<f64>>,
}

impl<'a> Conditioner<'a> {
    fn solve_row(&self, pool: &[Vec<f64>], x: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.chosen.len());
        for (i, &c) in self.chosen.iter().enumerate() {
            let k = self.kernel.eval_unchecked(&pool[c], &pool[x]);
            let s: f64 = (0..i).map(|j| self.l[i][j] * v[j]).sum();
            v.push((k - s) / self.l[i][i]);
        }
        v
    }

    fn variance(&self, pool: &[Vec<f64>], x: usize) -> f64 {
        let v = self.solve_row(pool, x);
        self.kernel.eval_unchecked(&pool[x], &pool[x]) - v.iter().map(|a| a * a).sum::<f64>()
    }

    /// `Inf(A + x) - Inf(A)`.
    fn gain(&self, pool: &[Vec<f64>], x: usize) -> f64 {
        0.5 * (1.0 + self.variance(pool, x).max(0.0) / self.gamma2).ln()
    }

    fn add(&mut self, pool: &[Vec<f64>], x: usize) {
        let mut row = self.solve_row(pool, x);
        let diag = self.kernel.eval_unchecked(&pool[x], &pool[x]) + self.gamma2 - row.iter().map(|a| a * a).sum::<f64>();
        row.push(diag.max(f64::MIN_POSITIVE).sqrt());
        self.l.push(row);
        self.chosen.push(x);
    }
}

/// Stochastic greedy maximization of informativeness. Each step draws
/// [`sample_count`] candidates with replacement from the unchosen pool and keeps the one
/// with the largest marginal gain. Returns pool indices in selection order.
pub fn select_training_set(
    pool: &[Vec<f64>],
    cfg: &SelectionConfig,
    kernel: &Kernel,
    gamma2: f64,
) -> Result<Vec<usize>, SurrogateError> {
    cfg.validate(pool.len())?;
    kernel.validate()?;
    if !(gamma2 > 0.0) {
        return Err(SurrogateError::InvalidHyper(format!("gamma2 {gamma2} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let per_step = sample_count(pool.len(), cfg.n_select, cfg.epsilon).max(1);
    let mut cond = Conditioner { kernel, gamma2, chosen: Vec::new(), l: Vec::new() };
    let mut remaining: Vec<usize> = (0..pool.len()).collect();
    for _ in 0..cfg.n_select {
        let mut best: Option<(f64, usize)> = None;
        for _ in 0..per_step {
            let pos = rng.random_range(0..remaining.len());
            let gain = cond.gain(pool, remaining[pos]);
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, pos));
            }
        }
        let (_, pos) = best.expect("at least one candidate");
        let x = remaining.swap_remove(pos);
        cond.add(pool, x);
    }
    Ok(cond.chosen)
}
