use super::BenchError;
use crate::circuit::{Assignment, HardwareGraph};

/// First `n` nodes, in row-major order, of a `rows x cols` lattice, with the identity
/// placement.
pub fn grid_hardware(rows: usize, cols: usize, n: usize) -> Result<(HardwareGraph, Assignment), BenchError> {
    if rows * cols < n || n == 0 {
        return Err(BenchError::GridTooSmall { rows, cols, n });
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols && v + 1 < n {
                edges.push((v, v + 1));
            }
            if r + 1 < rows && v + cols < n {
                edges.push((v, v + cols));
            }
        }
    }
    Ok((HardwareGraph::new(n, edges)?, Assignment::identity(n)))
}
