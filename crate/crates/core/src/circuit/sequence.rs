use serde::{Deserialize, Serialize};

use super::{Assignment, CircuitError, DependencyGraph, Gate, HardwareGraph};

/// Ordered routing solution with its gate limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSequence {
    pub gates: Vec<Gate>,
    pub limit: usize,
}

impl GateSequence {
    pub fn new(gates: Vec<Gate>, limit: usize) -> Self {
        GateSequence { gates, limit }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// The first `i` gates.
    pub fn prefix(&self, i: usize) -> GateSequence {
        GateSequence { gates: self.gates[..i.min(self.gates.len())].to_vec(), limit: self.limit }
    }

    pub fn swap_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_swap()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Violation {
    /// A target gate never occurs in the sequence.
    MissingTarget { target: usize },
    /// A non-SWAP gate that matches no remaining target.
    ExtraneousGate { index: usize },
    /// Gate at `index` precedes one of its prerequisites.
    Dependency { index: usize, prerequisite: usize },
    /// Gate at `index` acts on hardware qubits that are not coupled.
    Connectivity { index: usize },
    Length { length: usize, limit: usize },
}

/// Outcome of constraint checking; at most one violation is kept per constraint.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn inclusion(&self) -> Option<&Violation> {
        self.violations
            .iter()
            .find(|v| matches!(v, Violation::MissingTarget { .. } | Violation::ExtraneousGate { .. }))
    }

    pub fn dependency(&self) -> Option<&Violation> {
        self.violations.iter().find(|v| matches!(v, Violation::Dependency { .. }))
    }

    pub fn connectivity(&self) -> Option<&Violation> {
        self.violations.iter().find(|v| matches!(v, Violation::Connectivity { .. }))
    }
}

/// Assigns each non-SWAP gate of `gates` to a target it equals.
///
/// Identical targets can sit at different places in the dependency graph, so an
/// assignment is searched in which every gate's prerequisites come earlier; ties
/// between ready candidates are resolved by backtracking. When no such assignment
/// exists, gates fall back to the lowest-id equal target, ready ones first.
/// Returns per-position target ids (`None` for SWAP or unmatched) and unmatched positions.
pub fn match_targets(gates: &[Gate], targets: &[Gate], deps: &DependencyGraph) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut used = vec![false; targets.len()];
    let mut out = Vec::with_capacity(gates.len());
    let mut budget = 20_000usize;
    if search(0, gates, targets, deps, &mut used, &mut out, &mut budget) {
        return (out, Vec::new());
    }

    let mut used = vec![false; targets.len()];
    let mut matched = Vec::with_capacity(gates.len());
    let mut extraneous = Vec::new();
    for (i, g) in gates.iter().enumerate() {
        if g.is_swap() {
            matched.push(None);
            continue;
        }
        let ready = |t: usize| deps.parents(t).iter().all(|&p| used[p]);
        let candidates = || (0..targets.len()).filter(|&t| !used[t] && targets[t].same_gate(g));
        match candidates().find(|&t| ready(t)).or_else(|| candidates().next()) {
            Some(t) => {
                used[t] = true;
                matched.push(Some(t));
            }
            None => {
                matched.push(None);
                extraneous.push(i);
            }
        }
    }
    (matched, extraneous)
}

fn search(
    pos: usize,
    gates: &[Gate],
    targets: &[Gate],
    deps: &DependencyGraph,
    used: &mut [bool],
    out: &mut Vec<Option<usize>>,
    budget: &mut usize,
) -> bool {
    let Some(g) = gates.get(pos) else { return true };
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    if g.is_swap() {
        out.push(None);
        if search(pos + 1, gates, targets, deps, used, out, budget) {
            return true;
        }
        out.pop();
        return false;
    }
    for t in 0..targets.len() {
        if used[t] || !targets[t].same_gate(g) || !deps.parents(t).iter().all(|&p| used[p]) {
            continue;
        }
        used[t] = true;
        out.push(Some(t));
        if search(pos + 1, gates, targets, deps, used, out, budget) {
            return true;
        }
        out.pop();
        used[t] = false;
    }
    false
}

/// Checks inclusion, dependency, connectivity and length.
///
/// Structural problems (qubits out of range, mismatched sizes) are errors, not violations.
pub fn validate_sequence(
    seq: &GateSequence,
    targets: &[Gate],
    gd: &DependencyGraph,
    gh: &HardwareGraph,
    phi0: &Assignment,
) -> Result<ValidityReport, CircuitError> {
    let n = phi0.len();
    if gh.n_qubits() != n {
        return Err(CircuitError::InvalidInstance(format!(
            "assignment covers {n} qubits but hardware has {}",
            gh.n_qubits()
        )));
    }
    if gd.len() != targets.len() {
        return Err(CircuitError::InvalidInstance(format!(
            "dependency graph has {} nodes for {} targets",
            gd.len(),
            targets.len()
        )));
    }
    for g in seq.gates.iter().chain(targets) {
        g.check(n)?;
    }

    let mut report = ValidityReport::default();
    let (matched, extraneous) = match_targets(&seq.gates, targets, gd);

    if let Some(&index) = extraneous.first() {
        report.violations.push(Violation::ExtraneousGate { index });
    } else {
        let mut present = vec![false; targets.len()];
        matched.iter().flatten().for_each(|&t| present[t] = true);
        if let Some(target) = present.iter().position(|p| !p) {
            report.violations.push(Violation::MissingTarget { target });
        }
    }

    let mut position = vec![None; targets.len()];
    for (i, t) in matched.iter().enumerate() {
        if let Some(t) = t {
            position[*t] = Some(i);
        }
    }
    'dep: for (i, t) in matched.iter().enumerate() {
        let Some(t) = *t else { continue };
        for &a in gd.ancestors(t) {
            if matches!(position[a], Some(j) if j > i) {
                report.violations.push(Violation::Dependency { index: i, prerequisite: a });
                break 'dep;
            }
        }
    }

    let mut phi = phi0.clone();
    for (i, g) in seq.gates.iter().enumerate() {
        if let Some(qv) = g.qv {
            if !gh.adjacent(phi.hardware(g.qu), phi.hardware(qv)) {
                report.violations.push(Violation::Connectivity { index: i });
                break;
            }
            if g.is_swap() {
                phi.swap_in_place(g.qu, qv)?;
            }
        }
    }

    if seq.len() > seq.limit {
        report.violations.push(Violation::Length { length: seq.len(), limit: seq.limit });
    }
    Ok(report)
}
