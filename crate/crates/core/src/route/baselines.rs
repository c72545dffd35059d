use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionSpace, NoBonus, RewardConfig, RouteError, RoutingEnv};
use crate::circuit::{decompose, CircuitTable, Gate, GateSequence, ProblemInstance};

/// Result of one routing episode.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteOutcome {
    pub gates: Vec<Gate>,
    pub feasible: bool,
    pub table: CircuitTable,
    pub swaps: usize,
    pub gate_limit: usize,
}

impl RouteOutcome {
    pub fn from_env(env: &RoutingEnv<'_>) -> Self {
        RouteOutcome {
            gates: env.gates().to_vec(),
            feasible: env.is_feasible(),
            table: env.table().clone(),
            swaps: env.swaps(),
            gate_limit: env.instance().gate_limit,
        }
    }

    pub fn sequence(&self) -> GateSequence {
        GateSequence::new(self.gates.clone(), self.gate_limit)
    }
}

/// Picks uniformly among legal actions until the episode ends.
pub fn random_route<R: Rng + ?Sized>(inst: &ProblemInstance, space: &ActionSpace, rng: &mut R) -> Result<RouteOutcome, RouteError> {
    let mut env = RoutingEnv::new(inst, space)?;
    let cfg = RewardConfig::default();
    while !env.is_done() {
        let legal = env.legal_actions();
        let &a = legal.choose(rng).expect("SWAPs keep the mask non-empty");
        env.step(a, &NoBonus, &cfg)?;
    }
    Ok(RouteOutcome::from_env(&env))
}

/// Random routing retried with consecutive seeds until one attempt is feasible.
pub fn random_feasible_route(inst: &ProblemInstance, space: &ActionSpace, seed: u64, attempts: usize) -> Result<Option<RouteOutcome>, RouteError> {
    for k in 0..attempts as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
        let out = random_route(inst, space, &mut rng)?;
        if out.feasible {
            return Ok(Some(out));
        }
    }
    Ok(None)
}

/// Hardware distances of ready two-qubit targets: (closest, total). Unready targets add to
/// a third term.
fn distance_key(env: &RoutingEnv<'_>) -> (usize, usize, usize) {
    let inst = env.instance();
    let mut closest = usize::MAX;
    let mut ready_total = 0;
    let mut rest = 0;
    for i in (0..inst.targets.len()).filter(|&i| !env.placed()[i]) {
        if let (hu, Some(hv)) = env.target_position(i) {
            let d = inst.hardware.distance(hu, hv);
            if env.is_ready(i) {
                closest = closest.min(d);
                ready_total += d;
            } else {
                rest += d;
            }
        }
    }
    (closest, ready_total, rest)
}

/// Picks the legal action with the smallest depth increase; ties go to non-SWAP actions,
/// then to the SWAP that brings waiting targets closest, then to the lowest index.
pub fn depth_greedy_route(inst: &ProblemInstance, space: &ActionSpace) -> Result<RouteOutcome, RouteError> {
    let mut env = RoutingEnv::new(inst, space)?;
    let cfg = RewardConfig::default();
    while !env.is_done() {
        let depth = env.table().depth();
        let mut best: Option<((usize, bool, (usize, usize, usize)), usize)> = None;
        for a in env.legal_actions() {
            let (gate, target) = env.induced(a).expect("legal");
            let first = env.translator().chosen_layer(&gate, target);
            let last = first + decompose(&gate)?.len() - 1;
            let increase = last.saturating_sub(depth);
            let is_swap = target.is_none();
            let dist = if is_swap {
                let mut probe = env.clone();
                probe.step(a, &NoBonus, &cfg)?;
                distance_key(&probe)
            } else {
                (0, 0, 0)
            };
            let key = (increase, is_swap, dist);
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, a));
            }
        }
        let (_, a) = best.expect("mask non-empty");
        env.step(a, &NoBonus, &cfg)?;
    }
    Ok(RouteOutcome::from_env(&env))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Assignment, DependencyGraph, HardwareGraph};

    fn line_instance() -> ProblemInstance {
        let targets = vec![Gate::rzz(0.3, 0, 3), Gate::rx(0.2, 0), Gate::rzz(0.1, 1, 2)];
        let deps = DependencyGraph::new(3, vec![(0, 1)]).unwrap();
        ProblemInstance::new(targets, deps, HardwareGraph::path(4), Assignment::identity(4), 9, None).unwrap()
    }

    #[test]
    fn random_route_is_reproducible() {
        let inst = line_instance();
        let space = ActionSpace::for_instance(&inst);
        let a = random_route(&inst, &space, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = random_route(&inst, &space, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn depth_greedy_finishes_line_instance() {
        let inst = line_instance();
        let space = ActionSpace::for_instance(&inst);
        let out = depth_greedy_route(&inst, &space).unwrap();
        assert!(out.feasible);
        assert_eq!(out.swaps, 2);
    }
}
