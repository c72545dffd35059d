use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_dependency_graph, commutes, grid_hardware, BenchError};
use crate::circuit::{Assignment, Gate, HardwareGraph, ProblemInstance};
use crate::route::{depth_greedy_route, random_feasible_route, ActionSpace};

const ATTEMPTS: usize = 10_000;
const RANDOM_WITNESS_TRIES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Qaoa,
    Qml,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub family: Family,
    pub n_qubits: usize,
    pub min_targets: usize,
    pub max_targets: usize,
    pub count: usize,
    pub seed: u64,
    /// Lattice shape; [`default_grid`] when absent.
    #[serde(default)]
    pub grid: Option<(usize, usize)>,
    /// Gate limit as a multiple of the target count.
    #[serde(default = "default_limit_factor")]
    pub gate_limit_factor: usize,
}

fn default_limit_factor() -> usize {
    3
}

impl DatasetSpec {
    pub fn new(family: Family, n_qubits: usize, min_targets: usize, max_targets: usize, count: usize, seed: u64) -> Self {
        DatasetSpec { family, n_qubits, min_targets, max_targets, count, seed, grid: None, gate_limit_factor: 3 }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidSpec(m));
        if self.n_qubits < 2 {
            return bad("need at least two qubits".into());
        }
        let cap = self.n_qubits * (self.n_qubits - 1);
        if self.min_targets == 0 || self.min_targets > self.max_targets || self.max_targets > cap {
            return bad(format!("target range {}..={} must lie in 1..={cap}", self.min_targets, self.max_targets));
        }
        if self.count == 0 {
            return bad("count must be at least 1".into());
        }
        if self.gate_limit_factor == 0 {
            return bad("gate limit factor must be at least 1".into());
        }
        Ok(())
    }

    pub fn hardware(&self) -> Result<(HardwareGraph, Assignment), BenchError> {
        let (rows, cols) = self.grid.unwrap_or_else(|| default_grid(self.n_qubits));
        grid_hardware(rows, cols, self.n_qubits)
    }
}

/// `1 x n` up to five qubits, `2 x 4` for six to eight, squarish beyond.
pub fn default_grid(n: usize) -> (usize, usize) {
    match n {
        0..=5 => (1, n),
        6..=8 => (2, 4),
        _ => {
            let rows = (n as f64).sqrt().floor() as usize;
            (rows, n.div_ceil(rows))
        }
    }
}

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Keeps an instance only if some router finishes it within its gate limit.
fn routable(inst: &ProblemInstance, seed: u64) -> Result<bool, BenchError> {
    let space = ActionSpace::for_instance(inst);
    if depth_greedy_route(inst, &space)?.feasible {
        return Ok(true);
    }
    Ok(random_feasible_route(inst, &space, seed, RANDOM_WITNESS_TRIES)?.is_some())
}

fn finish(targets: Vec<Gate>, spec: &DatasetSpec) -> Result<ProblemInstance, BenchError> {
    let (hardware, phi0) = spec.hardware()?;
    let deps = build_dependency_graph(&targets, commutes);
    let limit = spec.gate_limit_factor * targets.len();
    Ok(ProblemInstance::new(targets, deps, hardware, phi0, limit, None)?)
}

fn qaoa_targets(n: usize, rng: &mut ChaCha8Rng) -> Vec<Gate> {
    let p: f64 = rng.random_range(0.05..1.0);
    let gamma = rng.random_range(0.0..std::f64::consts::PI);
    let beta = rng.random_range(0.0..std::f64::consts::PI);
    let mut targets = Vec::new();
    let mut involved = vec![false; n];
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                targets.push(Gate::rzz(gamma, a, b));
                involved[a] = true;
                involved[b] = true;
            }
        }
    }
    targets.extend((0..n).filter(|&q| involved[q]).map(|q| Gate::rx(beta, q)));
    targets
}

/// One RZZ per edge of an Erdős–Rényi graph, then one RX per touched qubit.
pub fn gen_qaoa(spec: &DatasetSpec) -> Result<Vec<ProblemInstance>, BenchError> {
    spec.validate()?;
    let n = spec.n_qubits;
    if spec.max_targets < 3 || spec.min_targets > n * (n - 1) / 2 + n {
        return Err(BenchError::Unsatisfiable { min: spec.min_targets, max: spec.max_targets, n, attempts: 0 });
    }
    (0..spec.count)
        .map(|i| {
            let mut rng = instance_rng(spec.seed, i);
            for _ in 0..ATTEMPTS {
                let targets = qaoa_targets(n, &mut rng);
                if !(spec.min_targets..=spec.max_targets).contains(&targets.len()) {
                    continue;
                }
                let inst = finish(targets, spec)?;
                if routable(&inst, rng.random())? {
                    return Ok(inst);
                }
            }
            Err(BenchError::Unsatisfiable { min: spec.min_targets, max: spec.max_targets, n, attempts: ATTEMPTS })
        })
        .collect()
}

/// Alternating RZZ and CX gates on uniformly drawn qubit pairs.
pub fn gen_qml(spec: &DatasetSpec) -> Result<Vec<ProblemInstance>, BenchError> {
    spec.validate()?;
    let n = spec.n_qubits;
    let qubits: Vec<usize> = (0..n).collect();
    (0..spec.count)
        .map(|i| {
            let mut rng = instance_rng(spec.seed, i);
            for _ in 0..ATTEMPTS {
                let k = rng.random_range(spec.min_targets..=spec.max_targets);
                let targets = (0..k)
                    .map(|j| {
                        let pair: Vec<usize> = qubits.choose_multiple(&mut rng, 2).copied().collect();
                        if j % 2 == 0 {
                            Gate::rzz(rng.random_range(0.0..std::f64::consts::PI), pair[0].min(pair[1]), pair[0].max(pair[1]))
                        } else {
                            Gate::cx(pair[0], pair[1])
                        }
                    })
                    .collect();
                let inst = finish(targets, spec)?;
                if routable(&inst, rng.random())? {
                    return Ok(inst);
                }
            }
            Err(BenchError::Unsatisfiable { min: spec.min_targets, max: spec.max_targets, n, attempts: ATTEMPTS })
        })
        .collect()
}

pub fn gen_instances(spec: &DatasetSpec) -> Result<Vec<ProblemInstance>, BenchError> {
    match spec.family {
        Family::Qaoa => gen_qaoa(spec),
        Family::Qml => gen_qml(spec),
    }
}
