//! In-place gate and Pauli-noise kernels over state vectors and density matrices.
//!
//! Qubit `q` is bit `q` of a basis index.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{NativeGate, NativeKind};

pub(crate) type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

pub(crate) fn rz_phases(theta: f64) -> (C, C) {
    (C::from_polar(1.0, -theta / 2.0), C::from_polar(1.0, theta / 2.0))
}

pub(crate) fn rx_matrix(theta: f64) -> [[C; 2]; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]]
}

/// Unitary of a native gate. Two-qubit matrices index the first qubit as the high bit.
pub fn native_unitary(kind: NativeKind, angle: f64) -> DMatrix<C> {
    match kind {
        NativeKind::Cx => {
            let mut m = DMatrix::from_element(4, 4, ZERO);
            m[(0, 0)] = ONE;
            m[(1, 1)] = ONE;
            m[(2, 3)] = ONE;
            m[(3, 2)] = ONE;
            m
        }
        NativeKind::Rz => {
            let (a, b) = rz_phases(angle);
            DMatrix::from_row_slice(2, 2, &[a, ZERO, ZERO, b])
        }
        NativeKind::Rx => {
            let u = rx_matrix(angle);
            DMatrix::from_row_slice(2, 2, &[u[0][0], u[0][1], u[1][0], u[1][1]])
        }
    }
}

/// Pauli channel weights `[I, X, Y, Z]`.
pub(crate) type PauliWeights = [f64; 4];

/// Composition of two Pauli channels; Pauli labels multiply as XOR of (x, z) bits.
pub(crate) fn compose_pauli(a: PauliWeights, b: PauliWeights) -> PauliWeights {
    // label -> (x bit, z bit): I=(0,0) X=(1,0) Y=(1,1) Z=(0,1)
    const BITS: [(u8, u8); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];
    let label = |x: u8, z: u8| BITS.iter().position(|&p| p == (x, z)).unwrap();
    let mut out = [0.0; 4];
    for (i, &pa) in a.iter().enumerate() {
        for (j, &pb) in b.iter().enumerate() {
            out[label(BITS[i].0 ^ BITS[j].0, BITS[i].1 ^ BITS[j].1)] += pa * pb;
        }
    }
    out
}

pub(crate) mod vector {
    use super::*;

    pub fn apply_native(amps: &mut [C], g: &NativeGate) {
        match g.kind {
            NativeKind::Cx => cx(amps, g.q0, g.q1.expect("CX has two qubits")),
            NativeKind::Rz => {
                let (a, b) = rz_phases(g.angle.unwrap_or(0.0));
                diag(amps, g.q0, a, b)
            }
            NativeKind::Rx => unitary1(amps, g.q0, rx_matrix(g.angle.unwrap_or(0.0))),
        }
    }

    fn cx(amps: &mut [C], control: usize, target: usize) {
        let (cb, tb) = (1 << control, 1 << target);
        for i in 0..amps.len() {
            if i & cb != 0 && i & tb == 0 {
                amps.swap(i, i | tb);
            }
        }
    }

    fn diag(amps: &mut [C], q: usize, d0: C, d1: C) {
        let b = 1 << q;
        for (i, a) in amps.iter_mut().enumerate() {
            *a *= if i & b == 0 { d0 } else { d1 };
        }
    }

    fn unitary1(amps: &mut [C], q: usize, u: [[C; 2]; 2]) {
        let b = 1 << q;
        for i in 0..amps.len() {
            if i & b == 0 {
                let (x, y) = (amps[i], amps[i | b]);
                amps[i] = u[0][0] * x + u[0][1] * y;
                amps[i | b] = u[1][0] * x + u[1][1] * y;
            }
        }
    }
}

pub(crate) mod density {
    use super::*;

    pub fn apply_native(rho: &mut [C], dim: usize, g: &NativeGate) {
        match g.kind {
            NativeKind::Cx => cx(rho, dim, g.q0, g.q1.expect("CX has two qubits")),
            NativeKind::Rz => {
                let (a, b) = rz_phases(g.angle.unwrap_or(0.0));
                diag(rho, dim, g.q0, a, b)
            }
            NativeKind::Rx => unitary1(rho, dim, g.q0, rx_matrix(g.angle.unwrap_or(0.0))),
        }
    }

    fn cx(rho: &mut [C], dim: usize, control: usize, target: usize) {
        let (cb, tb) = (1 << control, 1 << target);
        for r in 0..dim {
            if r & cb != 0 && r & tb == 0 {
                let (lo, hi) = rho.split_at_mut((r | tb) * dim);
                lo[r * dim..r * dim + dim].swap_with_slice(&mut hi[..dim]);
            }
        }
        for row in rho.chunks_exact_mut(dim) {
            for c in 0..dim {
                if c & cb != 0 && c & tb == 0 {
                    row.swap(c, c | tb);
                }
            }
        }
    }

    fn diag(rho: &mut [C], dim: usize, q: usize, d0: C, d1: C) {
        let b = 1 << q;
        let phase = [d0, d1];
        for (r, row) in rho.chunks_exact_mut(dim).enumerate() {
            let left = phase[(r & b != 0) as usize];
            let factors = [left * d0.conj(), left * d1.conj()];
            for (c, x) in row.iter_mut().enumerate() {
                *x *= factors[(c & b != 0) as usize];
            }
        }
    }

    fn unitary1(rho: &mut [C], dim: usize, q: usize, u: [[C; 2]; 2]) {
        let b = 1 << q;
        for r in 0..dim {
            if r & b == 0 {
                let (lo, hi) = rho.split_at_mut((r | b) * dim);
                let (top, bottom) = (&mut lo[r * dim..r * dim + dim], &mut hi[..dim]);
                for (x, y) in top.iter_mut().zip(bottom.iter_mut()) {
                    let (a, c) = (*x, *y);
                    *x = u[0][0] * a + u[0][1] * c;
                    *y = u[1][0] * a + u[1][1] * c;
                }
            }
        }
        let v = [[u[0][0].conj(), u[0][1].conj()], [u[1][0].conj(), u[1][1].conj()]];
        for row in rho.chunks_exact_mut(dim) {
            for c in 0..dim {
                if c & b == 0 {
                    let (x, y) = (row[c], row[c | b]);
                    row[c] = x * v[0][0] + y * v[0][1];
                    row[c | b] = x * v[1][0] + y * v[1][1];
                }
            }
        }
    }

    /// `ρ -> Σ w_P PρP` on qubit `q`.
    pub fn pauli_channel(rho: &mut [C], dim: usize, q: usize, w: PauliWeights) {
        let [pi, px, py, pz] = w;
        if px == 0.0 && py == 0.0 && pz == 0.0 {
            return;
        }
        let (keep_d, flip_d) = (pi + pz, px + py);
        let (keep_o, flip_o) = (pi - pz, px - py);
        let b = 1 << q;
        for r in 0..dim {
            if r & b != 0 {
                continue;
            }
            for c in 0..dim {
                if c & b != 0 {
                    continue;
                }
                let (i00, i01, i10, i11) = (r * dim + c, r * dim + (c | b), (r | b) * dim + c, (r | b) * dim + (c | b));
                let (b00, b01, b10, b11) = (rho[i00], rho[i01], rho[i10], rho[i11]);
                rho[i00] = b00 * keep_d + b11 * flip_d;
                rho[i11] = b11 * keep_d + b00 * flip_d;
                rho[i01] = b01 * keep_o + b10 * flip_o;
                rho[i10] = b10 * keep_o + b01 * flip_o;
            }
        }
    }
}
