use nalgebra::DMatrix;
use num_complex::Complex64;

use super::kernels::{density, vector, C};
use super::{NoiseError, NoiseModel};
use crate::circuit::CircuitTable;

/// Pure state on `n` qubits; amplitude index bit `q` is qubit `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C>,
}

impl StateVector {
    pub fn new(amps: Vec<C>) -> Result<Self, NoiseError> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(NoiseError::DimensionMismatch(format!("{len} amplitudes is not a power of two")));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(NoiseError::DimensionMismatch(format!("state norm {norm} is not 1")));
        }
        Ok(StateVector { n: len.trailing_zeros() as usize, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![C::new(0.0, 0.0); 1 << n];
        amps[index] = C::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> C {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub(crate) fn from_raw(n: usize, amps: Vec<C>) -> Self {
        StateVector { n, amps }
    }
}

/// Mixed state as a dense row-major `2^n x 2^n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C>,
}

impl DensityMatrix {
    pub fn zero_state(n: usize) -> Self {
        DensityMatrix::from_pure(&StateVector::basis(n, 0))
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        let data = a.iter().flat_map(|x| a.iter().map(move |y| x * y.conj())).collect();
        DensityMatrix { n: psi.n, data }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        let mut data = vec![C::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { n, data }
    }

    /// Wraps raw entries after checking the shape, Hermiticity and unit trace.
    pub fn from_entries(n: usize, data: Vec<C>) -> Result<Self, NoiseError> {
        let dim = 1usize << n;
        if data.len() != dim * dim {
            return Err(NoiseError::DimensionMismatch(format!("{} entries for {n} qubits", data.len())));
        }
        let rho = DensityMatrix { n, data };
        if rho.hermiticity_error() > 1e-10 || (rho.trace().re - 1.0).abs() > 1e-10 || rho.trace().im.abs() > 1e-10 {
            return Err(NoiseError::DimensionMismatch("entries are not a unit-trace Hermitian matrix".into()));
        }
        Ok(rho)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, row: usize, col: usize) -> C {
        self.data[row * self.dim() + col]
    }

    pub fn as_slice(&self) -> &[C] {
        &self.data
    }

    pub fn trace(&self) -> C {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .map(|(r, c)| (self.get(r, c) - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim(), self.dim(), &self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        let herm = (&m + m.adjoint()) * C::new(0.5, 0.0);
        herm.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> C {
        let a = psi.amplitudes();
        let d = self.dim();
        let mut total = C::new(0.0, 0.0);
        for (r, row) in self.data.chunks_exact(d).enumerate() {
            let inner: C = row.iter().zip(a).map(|(x, y)| x * y).sum();
            total += a[r].conj() * inner;
        }
        total
    }
}

fn check_rows(table: &CircuitTable, n: usize) -> Result<(), NoiseError> {
    if table.rows() > n {
        return Err(NoiseError::DimensionMismatch(format!("table has {} rows but state has {n} qubits", table.rows())));
    }
    Ok(())
}

/// Evolves `rho0` through the table column by column; each native gate is followed by
/// the noise channel on every qubit it acts on.
///
/// The state may carry extra qubits beyond the table's rows; they stay untouched.
pub fn run_noisy(table: &CircuitTable, rho0: &DensityMatrix, nm: &NoiseModel) -> Result<DensityMatrix, NoiseError> {
    check_rows(table, rho0.n)?;
    let mut rho = rho0.clone();
    let dim = rho.dim();
    for (_, g) in table.gates() {
        density::apply_native(&mut rho.data, dim, g);
        for q in g.qubits() {
            density::pauli_channel(&mut rho.data, dim, q, nm.pauli_weights(q));
        }
    }
    Ok(rho)
}

/// Noiseless evolution of a pure state.
pub fn run_ideal(table: &CircuitTable, psi: &StateVector) -> Result<StateVector, NoiseError> {
    check_rows(table, psi.n)?;
    let mut amps = psi.amps.clone();
    for (_, g) in table.gates() {
        vector::apply_native(&mut amps, g);
    }
    Ok(StateVector { n: psi.n, amps })
}
