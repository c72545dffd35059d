use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernels::{compose_pauli, PauliWeights, C};
use super::{DensityMatrix, NoiseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Depolarizing,
    BitFlip,
    PhaseFlip,
    /// Bit flip after phase flip after depolarizing, all at the same rate.
    Mix,
    None,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] =
        [NoiseKind::Depolarizing, NoiseKind::BitFlip, NoiseKind::PhaseFlip, NoiseKind::Mix, NoiseKind::None];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Depolarizing => "depolarizing",
            NoiseKind::BitFlip => "bit_flip",
            NoiseKind::PhaseFlip => "phase_flip",
            NoiseKind::Mix => "mix",
            NoiseKind::None => "none",
        }
    }

    /// Weights of I, X, Y, Z in the single-qubit channel at error rate `p`.
    pub(crate) fn pauli_weights(self, p: f64) -> PauliWeights {
        let depolarizing = [1.0 - p, p / 3.0, p / 3.0, p / 3.0];
        let bit = [1.0 - p, p, 0.0, 0.0];
        let phase = [1.0 - p, 0.0, 0.0, p];
        match self {
            NoiseKind::Depolarizing => depolarizing,
            NoiseKind::BitFlip => bit,
            NoiseKind::PhaseFlip => phase,
            NoiseKind::Mix => compose_pauli(bit, compose_pauli(phase, depolarizing)),
            NoiseKind::None => [1.0, 0.0, 0.0, 0.0],
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = NoiseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| NoiseError::InvalidConfig(format!("unknown noise kind {s:?}")))
    }
}

/// Kraus operators on one or two qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    ops: Vec<DMatrix<C>>,
    arity: usize,
}

fn pauli(label: usize) -> DMatrix<C> {
    let (o, i, z) = (C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(0.0, 0.0));
    let entries = match label {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        _ => [o, z, z, -o],
    };
    DMatrix::from_row_slice(2, 2, &entries)
}

fn check_probability(p: f64) -> Result<(), NoiseError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(NoiseError::InvalidProbability(p))
    }
}

fn pauli_set(weights: [f64; 4]) -> Vec<DMatrix<C>> {
    weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(l, w)| pauli(l) * C::new(w.sqrt(), 0.0))
        .collect()
}

/// Single-qubit Kraus set for `kind` at rate `p`.
pub fn build_channel(kind: NoiseKind, p: f64) -> Result<KrausChannel, NoiseError> {
    check_probability(p)?;
    let ops = match kind {
        NoiseKind::Depolarizing => pauli_set([1.0 - p, p / 3.0, p / 3.0, p / 3.0]),
        NoiseKind::BitFlip => pauli_set([1.0 - p, p, 0.0, 0.0]),
        NoiseKind::PhaseFlip => pauli_set([1.0 - p, 0.0, 0.0, p]),
        NoiseKind::None => vec![pauli(0)],
        NoiseKind::Mix => {
            let dep = build_channel(NoiseKind::Depolarizing, p)?;
            let phase = build_channel(NoiseKind::PhaseFlip, p)?;
            let bit = build_channel(NoiseKind::BitFlip, p)?;
            return Ok(dep.then(&phase).then(&bit));
        }
    };
    Ok(KrausChannel { ops, arity: 1 })
}

impl KrausChannel {
    pub fn new(ops: Vec<DMatrix<C>>) -> Result<Self, NoiseError> {
        let dim = ops.first().map(|m| m.nrows()).ok_or_else(|| NoiseError::InvalidConfig("no Kraus operators".into()))?;
        let arity = match dim {
            2 => 1,
            4 => 2,
            d => return Err(NoiseError::DimensionMismatch(format!("Kraus dimension {d} is not 2 or 4"))),
        };
        if ops.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(NoiseError::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        Ok(KrausChannel { ops, arity })
    }

    pub fn ops(&self) -> &[DMatrix<C>] {
        &self.ops
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Largest entry of `Σ K†K - I`.
    pub fn completeness_error(&self) -> f64 {
        let d = 1 << self.arity;
        let sum = self.ops.iter().fold(DMatrix::from_element(d, d, C::new(0.0, 0.0)), |acc, k| acc + k.adjoint() * k);
        (sum - DMatrix::identity(d, d)).iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Channel applying `self` first and `next` second.
    pub fn then(&self, next: &KrausChannel) -> KrausChannel {
        let ops = next.ops.iter().flat_map(|b| self.ops.iter().map(move |a| b * a)).collect();
        KrausChannel { ops, arity: self.arity }
    }
}

/// `ρ -> Σ K ρ K†` with the channel acting on `qubits`; the first listed qubit is the
/// high bit of the operator's local index.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel, qubits: &[usize]) -> Result<DensityMatrix, NoiseError> {
    if qubits.len() != ch.arity {
        return Err(NoiseError::ArityMismatch { expected: ch.arity, got: qubits.len() });
    }
    for &q in qubits {
        if q >= rho.n_qubits() {
            return Err(NoiseError::QubitOutOfRange { qubit: q, n: rho.n_qubits() });
        }
    }
    if qubits.len() == 2 && qubits[0] == qubits[1] {
        return Err(NoiseError::DimensionMismatch("repeated qubit".into()));
    }
    let dim = rho.dim();
    let mut out = vec![C::new(0.0, 0.0); dim * dim];
    for k in &ch.ops {
        let mut term = rho.as_slice().to_vec();
        local_left(&mut term, dim, k, qubits);
        local_right_adjoint(&mut term, dim, k, qubits);
        out.iter_mut().zip(&term).for_each(|(o, t)| *o += t);
    }
    DensityMatrix::from_entries(rho.n_qubits(), out)
}

fn local_indices(base: usize, qubits: &[usize]) -> Vec<usize> {
    let k = qubits.len();
    (0..1usize << k)
        .map(|local| {
            qubits.iter().enumerate().fold(base, |idx, (pos, &q)| {
                if local >> (k - 1 - pos) & 1 == 1 {
                    idx | 1 << q
                } else {
                    idx
                }
            })
        })
        .collect()
}

fn bases(dim: usize, qubits: &[usize]) -> impl Iterator<Item = usize> + '_ {
    let mask: usize = qubits.iter().map(|q| 1 << q).sum();
    (0..dim).filter(move |i| i & mask == 0)
}

fn local_left(m: &mut [C], dim: usize, op: &DMatrix<C>, qubits: &[usize]) {
    for base in bases(dim, qubits) {
        let idx = local_indices(base, qubits);
        for c in 0..dim {
            let v: Vec<C> = idx.iter().map(|&r| m[r * dim + c]).collect();
            for (a, &r) in idx.iter().enumerate() {
                m[r * dim + c] = (0..v.len()).map(|b| op[(a, b)] * v[b]).sum();
            }
        }
    }
}

fn local_right_adjoint(m: &mut [C], dim: usize, op: &DMatrix<C>, qubits: &[usize]) {
    for base in bases(dim, qubits) {
        let idx = local_indices(base, qubits);
        for r in 0..dim {
            let v: Vec<C> = idx.iter().map(|&c| m[r * dim + c]).collect();
            for (a, &c) in idx.iter().enumerate() {
                m[r * dim + c] = (0..v.len()).map(|b| v[b] * op[(a, b)].conj()).sum();
            }
        }
    }
}
