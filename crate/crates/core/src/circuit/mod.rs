//! Logical gates, routing constraints and translation into layered native circuits.

mod assignment;
mod gate;
mod graph;
mod instance;
mod sequence;
mod table;
mod translate;

pub use assignment::Assignment;
pub use gate::{decompose, Gate, GateKind, NativeGate, NativeKind};
pub use graph::{DependencyGraph, HardwareGraph};
pub use instance::ProblemInstance;
pub use sequence::{match_targets, validate_sequence, GateSequence, ValidityReport, Violation};
pub use table::{trait_vector, CircuitTable, TraitVector};
pub use translate::{translate, Translator};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("unknown gate kind {0:?}")]
    UnknownKind(String),
    #[error("malformed gate {gate}: {reason}")]
    MalformedGate { gate: String, reason: String },
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("dependency graph contains a cycle")]
    Cycle,
    #[error("assignment is not a bijection: {0}")]
    NotBijective(String),
    #[error("swap requires two distinct qubits, got {0} twice")]
    SwapSameQubit(usize),
    #[error("translation needs layer {needed} but the depth limit is {limit}")]
    DepthOverflow { needed: usize, limit: usize },
    #[error("sequence rejected at gate {index}: {reason}")]
    InvalidSequence { index: usize, reason: String },
    #[error("table cell ({row}, {col}) written twice")]
    CellOccupied { row: usize, col: usize },
    #[error("empty gate sequence")]
    EmptySequence,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}
