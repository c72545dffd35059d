//! The routing decision process: action space, legality mask, rewards and baseline routers.

mod action;
mod baselines;
mod env;

pub use action::{Action, ActionSpace};
pub use baselines::{depth_greedy_route, random_feasible_route, random_route, RouteOutcome};
pub use env::{FidelityEstimator, NoBonus, RewardConfig, RoutingEnv, StepOutcome};

use thiserror::Error;

use crate::circuit::CircuitError;

#[derive(Debug, Error)]
pub enum RouteError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("action {0} is not legal in this state")]
    IllegalAction(usize),
    #[error("episode already finished")]
    EpisodeOver,
    #[error("action space does not fit the instance: {0}")]
    SpaceMismatch(String),
    #[error("fidelity estimate failed: {0}")]
    Estimator(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}
