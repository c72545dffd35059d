//! Actor-critic routing agent: state features, networks, training loop and policy routing.

mod features;
mod metrics;
mod net;
mod train;

pub use features::{Observation, Observer};
pub use metrics::{bootstrap_mean_ci, feasibility_rate};
pub use net::{ActorNet, CriticNet, NetConfig};
pub use train::{
    route_with_policy, train_rl, update_networks, EpisodeRecord, IntervalStats, PolicyMode, ReplayBuffer, RlConfig,
    TrainReport, Transition, UpdateStats,
};

use thiserror::Error;

use crate::embed::EmbedError;
use crate::nn::NnError;
use crate::route::RouteError;

#[derive(Debug, Error)]
pub enum RlError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error("{what} loss is not finite ({value}) after {episodes} episodes")]
    NonFiniteLoss { what: &'static str, value: f64, episodes: usize },
    #[error("replay buffer is empty")]
    EmptyBuffer,
    #[error("no training instances")]
    NoInstances,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
