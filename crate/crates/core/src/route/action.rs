use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::RouteError;
use crate::circuit::{GateKind, HardwareGraph, ProblemInstance};

/// A gate kind on hardware qubits. Single-qubit kinds leave `hv` empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub kind: GateKind,
    pub hu: usize,
    pub hv: Option<usize>,
}

/// Fixed enumeration of actions for a gate set on a hardware graph.
///
/// Layout: two-qubit target kinds per edge (both directions for CX), then SWAP per edge,
/// then single-qubit target kinds per qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "SpaceSpec", into = "SpaceSpec")]
pub struct ActionSpace {
    gate_set: Vec<GateKind>,
    n_qubits: usize,
    edges: Vec<(usize, usize)>,
    actions: Vec<Action>,
    index: HashMap<Action, usize>,
}

#[derive(Clone, Serialize, Deserialize)]
struct SpaceSpec {
    gate_set: Vec<GateKind>,
    n_qubits: usize,
    edges: Vec<(usize, usize)>,
}

impl From<SpaceSpec> for ActionSpace {
    fn from(s: SpaceSpec) -> Self {
        ActionSpace::build(s.gate_set, s.n_qubits, s.edges)
    }
}

impl From<ActionSpace> for SpaceSpec {
    fn from(a: ActionSpace) -> Self {
        SpaceSpec { gate_set: a.gate_set, n_qubits: a.n_qubits, edges: a.edges }
    }
}

impl ActionSpace {
    /// `gate_set` lists the target kinds; SWAP is always added.
    pub fn new(gate_set: &[GateKind], hardware: &HardwareGraph) -> Self {
        let mut kinds: Vec<GateKind> = gate_set.iter().copied().filter(|k| *k != GateKind::Swap).collect();
        kinds.sort();
        kinds.dedup();
        ActionSpace::build(kinds, hardware.n_qubits(), hardware.edges().to_vec())
    }

    /// Space over the kinds that occur among the instance's targets.
    pub fn for_instance(inst: &ProblemInstance) -> Self {
        let kinds: Vec<GateKind> = inst.targets.iter().map(|g| g.kind).collect();
        ActionSpace::new(&kinds, &inst.hardware)
    }

    fn build(gate_set: Vec<GateKind>, n_qubits: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut actions = Vec::new();
        for &kind in gate_set.iter().filter(|k| k.is_two_qubit()) {
            for &(a, b) in &edges {
                actions.push(Action { kind, hu: a, hv: Some(b) });
                if !kind.is_symmetric() {
                    actions.push(Action { kind, hu: b, hv: Some(a) });
                }
            }
        }
        actions.extend(edges.iter().map(|&(a, b)| Action { kind: GateKind::Swap, hu: a, hv: Some(b) }));
        for &kind in gate_set.iter().filter(|k| !k.is_two_qubit()) {
            actions.extend((0..n_qubits).map(|q| Action { kind, hu: q, hv: None }));
        }
        let index = actions.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        ActionSpace { gate_set, n_qubits, edges, actions, index }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn gate_set(&self) -> &[GateKind] {
        &self.gate_set
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn action(&self, i: usize) -> Action {
        self.actions[i]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    /// Index of `kind` on hardware qubits `(hu, hv)`; symmetric kinds accept either order.
    pub fn index_of(&self, kind: GateKind, hu: usize, hv: Option<usize>) -> Option<usize> {
        let key = match hv {
            Some(v) if kind.is_symmetric() => Action { kind, hu: hu.min(v), hv: Some(hu.max(v)) },
            _ => Action { kind, hu, hv },
        };
        self.index.get(&key).copied()
    }

    pub fn swap_index(&self, edge: usize) -> usize {
        let two_qubit: usize = self
            .gate_set
            .iter()
            .filter(|k| k.is_two_qubit())
            .map(|k| if k.is_symmetric() { 1 } else { 2 })
            .sum();
        two_qubit * self.edges.len() + edge
    }

    pub fn is_swap(&self, i: usize) -> bool {
        self.actions[i].kind == GateKind::Swap
    }

    /// Whether every target kind of `inst` has slots and the hardware matches.
    pub fn check_fits(&self, inst: &ProblemInstance) -> Result<(), RouteError> {
        if inst.hardware.n_qubits() != self.n_qubits || inst.hardware.edges() != self.edges.as_slice() {
            return Err(RouteError::SpaceMismatch("hardware graph differs".into()));
        }
        if let Some(g) = inst.targets.iter().find(|g| !self.gate_set.contains(&g.kind)) {
            return Err(RouteError::SpaceMismatch(format!("no slots for {}", g.kind.name())));
        }
        Ok(())
    }
}
