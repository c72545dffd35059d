//! Graph-recurrent autoencoder that maps circuit tables on a hardware graph to latent vectors.

mod encoding;
mod gcn;
mod model;

pub use encoding::{FeatureEncoding, GateKey};
pub use gcn::{gcn_dense, gcn_forward, gcn_onehot, normalize_adjacency, normalize_edges, Tgcn};
pub use model::{train_autoencoder, Autoencoder, EmbedRecord, EmbedTrainConfig, TrainHistory};

use thiserror::Error;

use crate::circuit::CircuitError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("gate {0} has no feature slot on this hardware")]
    UnknownGate(String),
    #[error("table has {table} rows but the hardware has {hardware} qubits")]
    RowMismatch { table: usize, hardware: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("non-finite loss {loss} at epoch {epoch}, sample {sample}")]
    NonFiniteLoss { epoch: usize, sample: usize, loss: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
