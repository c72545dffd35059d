//! Gaussian-process fidelity surrogate over latent vectors, and training-set selection.

mod gp;
mod kernel;
mod select;
mod stats;

pub use gp::{fit_hyperparameters, gp_fit, FitReport, GpModel, HyperGrid, SurrogateFile};
pub use kernel::{Kernel, KernelKind};
pub use select::{informativeness, sample_count, select_training_set, SelectionConfig};
pub use stats::{latent_fidelity_correlation, pearson, rmse};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurrogateError {
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("covariance not positive definite for {0}")]
    NotPositiveDefinite(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("no training points")]
    Empty,
    #[error("pool of {pool} cannot supply {wanted} points")]
    PoolTooSmall { pool: usize, wanted: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("correlation undefined: {0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
}
