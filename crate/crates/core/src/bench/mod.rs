//! Seeded QAOA and QML routing instances, grid hardware, and dependency construction.

mod commute;
mod generate;
mod grid;

pub use commute::{build_dependency_graph, commutes};
pub use generate::{default_grid, gen_instances, gen_qaoa, gen_qml, DatasetSpec, Family};
pub use grid::grid_hardware;

use thiserror::Error;

use crate::circuit::CircuitError;
use crate::route::RouteError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error("grid {rows}x{cols} has fewer than {n} nodes")]
    GridTooSmall { rows: usize, cols: usize, n: usize },
    #[error("could not hit {min}..={max} targets on {n} qubits after {attempts} attempts")]
    Unsatisfiable { min: usize, max: usize, n: usize, attempts: usize },
}
