use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CircuitError, NativeGate, NativeKind};

/// Layered native circuit: `rows` hardware qubits by `cols` layers.
///
/// A two-qubit gate fills both of its rows in one column; single-qubit gates fill one.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitTable {
    rows: usize,
    cols: usize,
    cells: Vec<Option<NativeGate>>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    rows: usize,
    cols: usize,
    cells: Vec<RawCell>,
}

#[derive(Serialize, Deserialize)]
struct RawCell {
    row: usize,
    col: usize,
    kind: NativeKind,
    qubits: Vec<usize>,
    #[serde(default)]
    angle: Option<f64>,
}

impl Serialize for CircuitTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut cells = Vec::new();
        for col in 0..self.cols {
            for row in 0..self.rows {
                if let Some(g) = self.get(row, col) {
                    cells.push(RawCell { row, col, kind: g.kind, qubits: g.qubits().collect(), angle: g.angle });
                }
            }
        }
        RawTable { rows: self.rows, cols: self.cols, cells }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CircuitTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = RawTable::deserialize(d)?;
        let mut table = CircuitTable::new(raw.rows, raw.cols);
        for c in raw.cells {
            let gate = match c.qubits.as_slice() {
                [q] => NativeGate { kind: c.kind, q0: *q, q1: None, angle: c.angle },
                [a, b] => NativeGate { kind: c.kind, q0: *a, q1: Some(*b), angle: c.angle },
                _ => return Err(D::Error::custom("cell must list one or two qubits")),
            };
            if c.row >= raw.rows || c.col >= raw.cols {
                return Err(D::Error::custom(format!("cell ({}, {}) outside table", c.row, c.col)));
            }
            if table.get(c.row, c.col).is_some() {
                return Err(D::Error::custom(format!("cell ({}, {}) listed twice", c.row, c.col)));
            }
            table.cells[c.row * raw.cols + c.col] = Some(gate);
        }
        table.check_invariants().map_err(D::Error::custom)?;
        Ok(table)
    }
}

impl CircuitTable {
    pub fn new(rows: usize, cols: usize) -> Self {
        CircuitTable { rows, cols, cells: vec![None; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&NativeGate> {
        self.cells[row * self.cols + col].as_ref()
    }

    /// Writes `gate` into every row it acts on at column `col`.
    pub fn place(&mut self, col: usize, gate: NativeGate) -> Result<(), CircuitError> {
        if col >= self.cols {
            return Err(CircuitError::DepthOverflow { needed: col + 1, limit: self.cols });
        }
        for row in gate.qubits() {
            if row >= self.rows {
                return Err(CircuitError::QubitOutOfRange { qubit: row, n: self.rows });
            }
            if self.get(row, col).is_some() {
                return Err(CircuitError::CellOccupied { row, col });
            }
        }
        for row in gate.qubits() {
            self.cells[row * self.cols + col] = Some(gate);
        }
        Ok(())
    }

    /// Number of columns up to and including the last occupied one.
    pub fn depth(&self) -> usize {
        (0..self.cols)
            .rev()
            .find(|&c| (0..self.rows).any(|r| self.get(r, c).is_some()))
            .map_or(0, |c| c + 1)
    }

    /// Gates of column `col`, each listed once.
    pub fn column(&self, col: usize) -> impl Iterator<Item = &NativeGate> + '_ {
        (0..self.rows).filter_map(move |r| self.get(r, col).filter(|g| g.q0 == r))
    }

    /// All gates in layer order, each listed once with its column.
    pub fn gates(&self) -> impl Iterator<Item = (usize, &NativeGate)> + '_ {
        (0..self.depth()).flat_map(move |c| self.column(c).map(move |g| (c, g)))
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(Option::is_none)
    }

    /// Every occupied cell names its own row, and two-qubit gates fill both rows.
    pub fn check_invariants(&self) -> Result<(), CircuitError> {
        for col in 0..self.cols {
            for row in 0..self.rows {
                let Some(g) = self.get(row, col) else { continue };
                let bad = |reason: &str| CircuitError::MalformedGate {
                    gate: format!("{g:?} at ({row}, {col})"),
                    reason: reason.into(),
                };
                if g.kind.is_two_qubit() != g.q1.is_some() {
                    return Err(bad("arity does not match kind"));
                }
                if !g.qubits().any(|q| q == row) {
                    return Err(bad("gate does not act on its row"));
                }
                for q in g.qubits() {
                    if q >= self.rows {
                        return Err(bad("qubit outside table"));
                    }
                    if self.get(q, col) != Some(g) {
                        return Err(bad("partner cell differs"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Depth and per-kind native gate counts of a circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitVector {
    pub depth: usize,
    pub counts: BTreeMap<NativeKind, usize>,
}

impl TraitVector {
    pub fn count(&self, kind: NativeKind) -> usize {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    /// `[depth, CX, RZ, RX]` as reals.
    pub fn to_array(&self) -> [f64; 4] {
        [
            self.depth as f64,
            self.count(NativeKind::Cx) as f64,
            self.count(NativeKind::Rz) as f64,
            self.count(NativeKind::Rx) as f64,
        ]
    }

    pub fn total_gates(&self) -> usize {
        self.counts.values().sum()
    }
}

pub fn trait_vector(table: &CircuitTable) -> TraitVector {
    let mut counts: BTreeMap<NativeKind, usize> = NativeKind::ALL.iter().map(|&k| (k, 0)).collect();
    for (_, g) in table.gates() {
        *counts.entry(g.kind).or_default() += 1;
    }
    TraitVector { depth: table.depth(), counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_has_zero_traits() {
        let tv = trait_vector(&CircuitTable::new(3, 5));
        assert_eq!(tv.depth, 0);
        assert_eq!(tv.total_gates(), 0);
    }

    #[test]
    fn two_qubit_gates_count_once() {
        let mut t = CircuitTable::new(3, 4);
        t.place(0, NativeGate::cx(0, 1)).unwrap();
        t.place(1, NativeGate::rx(0.2, 2)).unwrap();
        let tv = trait_vector(&t);
        assert_eq!(tv.to_array(), [2.0, 1.0, 0.0, 1.0]);
        assert_eq!(t.place(0, NativeGate::rz(0.1, 1)).unwrap_err(), CircuitError::CellOccupied { row: 1, col: 0 });
    }

    #[test]
    fn json_round_trip_keeps_identities() {
        let mut t = CircuitTable::new(3, 4);
        t.place(0, NativeGate::cx(2, 1)).unwrap();
        t.place(2, NativeGate::rz(0.5, 0)).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: CircuitTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        let bad = r#"{"rows":2,"cols":1,"cells":[{"row":0,"col":0,"kind":"CX_N","qubits":[0,1]}]}"#;
        assert!(serde_json::from_str::<CircuitTable>(bad).is_err());
    }
}
