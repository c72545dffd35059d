use serde::{Deserialize, Serialize};

use super::{Assignment, CircuitError, DependencyGraph, Gate, HardwareGraph};

/// A routing problem: targets, their dependencies, the coupling graph, initial placement and limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct ProblemInstance {
    pub targets: Vec<Gate>,
    pub deps: DependencyGraph,
    pub hardware: HardwareGraph,
    pub phi0: Assignment,
    pub gate_limit: usize,
    pub depth_limit: usize,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    n_qubits: usize,
    hardware_edges: Vec<(usize, usize)>,
    targets: Vec<Gate>,
    dep_edges: Vec<(usize, usize)>,
    phi0: Vec<usize>,
    gate_limit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth_limit: Option<usize>,
}

impl TryFrom<RawInstance> for ProblemInstance {
    type Error = CircuitError;
    fn try_from(raw: RawInstance) -> Result<Self, Self::Error> {
        let hardware = HardwareGraph::new(raw.n_qubits, raw.hardware_edges)?;
        let deps = DependencyGraph::new(raw.targets.len(), raw.dep_edges)?;
        let phi0 = Assignment::new(raw.phi0)?;
        ProblemInstance::new(raw.targets, deps, hardware, phi0, raw.gate_limit, raw.depth_limit)
    }
}

impl From<ProblemInstance> for RawInstance {
    fn from(p: ProblemInstance) -> Self {
        let default_depth = 4 * p.gate_limit;
        RawInstance {
            n_qubits: p.hardware.n_qubits(),
            hardware_edges: p.hardware.edges().to_vec(),
            dep_edges: p.deps.edges().to_vec(),
            phi0: p.phi0.as_slice().to_vec(),
            gate_limit: p.gate_limit,
            depth_limit: (p.depth_limit != default_depth).then_some(p.depth_limit),
            targets: p.targets,
        }
    }
}

impl ProblemInstance {
    /// `depth_limit` defaults to four times the gate limit.
    pub fn new(
        targets: Vec<Gate>,
        deps: DependencyGraph,
        hardware: HardwareGraph,
        phi0: Assignment,
        gate_limit: usize,
        depth_limit: Option<usize>,
    ) -> Result<Self, CircuitError> {
        let n = hardware.n_qubits();
        if phi0.len() != n {
            return Err(CircuitError::InvalidInstance(format!("phi0 has {} entries for {n} qubits", phi0.len())));
        }
        if deps.len() != targets.len() {
            return Err(CircuitError::InvalidInstance("dependency graph size differs from target count".into()));
        }
        if gate_limit == 0 {
            return Err(CircuitError::InvalidInstance("gate limit must be positive".into()));
        }
        for g in &targets {
            if g.is_swap() {
                return Err(CircuitError::InvalidInstance("targets may not contain SWAP".into()));
            }
            g.check(n)?;
        }
        Ok(ProblemInstance {
            targets,
            deps,
            hardware,
            phi0,
            gate_limit,
            depth_limit: depth_limit.unwrap_or(4 * gate_limit),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.hardware.n_qubits()
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }
}
