//! Density-matrix simulation of circuit tables under per-qubit Pauli noise, and fidelity metrics.

mod channel;
mod fidelity;
mod kernels;
mod metrics;
mod model;
mod state;

pub use channel::{apply_channel, build_channel, KrausChannel, NoiseKind};
pub use fidelity::{circuit_fidelity, haar_state, FidelityEstimate, FidelityMode, EXACT_QUBIT_CAP};
pub use kernels::native_unitary;
pub use metrics::{hf, pf, pst};
pub use model::{NoiseModel, RateOverride};
pub use state::{run_ideal, run_noisy, DensityMatrix, StateVector};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("channel acts on {expected} qubits but {got} were given")]
    ArityMismatch { expected: usize, got: usize },
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("exact fidelity supports at most {cap} qubits, circuit has {n}; use Monte Carlo mode")]
    Capacity { n: usize, cap: usize },
    #[error("invalid noise configuration: {0}")]
    InvalidConfig(String),
    #[error("Monte Carlo mode needs at least one sample")]
    NoSamples,
}
