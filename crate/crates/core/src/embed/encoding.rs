use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EmbedError;
use crate::circuit::{CircuitTable, HardwareGraph, NativeGate, NativeKind};

/// A native gate with its angle stripped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GateKey {
    pub kind: NativeKind,
    pub q0: usize,
    pub q1: Option<usize>,
}

impl From<&NativeGate> for GateKey {
    fn from(g: &NativeGate) -> Self {
        GateKey { kind: g.kind, q0: g.q0, q1: g.q1 }
    }
}

/// One-hot slot per gate identity the hardware can host, plus a final "empty" slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<GateKey>", into = "Vec<GateKey>")]
pub struct FeatureEncoding {
    keys: Vec<GateKey>,
    index: BTreeMap<GateKey, usize>,
}

impl From<Vec<GateKey>> for FeatureEncoding {
    fn from(keys: Vec<GateKey>) -> Self {
        let index = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        FeatureEncoding { keys, index }
    }
}

impl From<FeatureEncoding> for Vec<GateKey> {
    fn from(e: FeatureEncoding) -> Self {
        e.keys
    }
}

impl FeatureEncoding {
    /// CX in both directions on every edge, then RZ and RX on every qubit.
    pub fn for_hardware(gh: &HardwareGraph) -> Self {
        let mut keys = Vec::new();
        for &(a, b) in gh.edges() {
            keys.push(GateKey { kind: NativeKind::Cx, q0: a, q1: Some(b) });
            keys.push(GateKey { kind: NativeKind::Cx, q0: b, q1: Some(a) });
        }
        for kind in [NativeKind::Rz, NativeKind::Rx] {
            keys.extend((0..gh.n_qubits()).map(|q| GateKey { kind, q0: q, q1: None }));
        }
        keys.into()
    }

    pub fn vocabulary(&self) -> &[GateKey] {
        &self.keys
    }

    /// Feature width including the empty slot.
    pub fn width(&self) -> usize {
        self.keys.len() + 1
    }

    pub fn empty_slot(&self) -> usize {
        self.keys.len()
    }

    pub fn slot(&self, gate: &NativeGate) -> Result<usize, EmbedError> {
        self.index
            .get(&GateKey::from(gate))
            .copied()
            .ok_or_else(|| EmbedError::UnknownGate(format!("{:?}{:?}", gate.kind, gate.qubits().collect::<Vec<_>>())))
    }

    /// Active slot for each row of column `col`.
    pub fn column(&self, table: &CircuitTable, col: usize) -> Result<Vec<usize>, EmbedError> {
        (0..table.rows())
            .map(|r| table.get(r, col).map_or(Ok(self.empty_slot()), |g| self.slot(g)))
            .collect()
    }

    /// Slots for every column up to the table's depth.
    pub fn columns(&self, table: &CircuitTable) -> Result<Vec<Vec<usize>>, EmbedError> {
        (0..table.depth()).map(|c| self.column(table, c)).collect()
    }
}
