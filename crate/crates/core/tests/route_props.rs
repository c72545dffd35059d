use fiddle::bench::{gen_instances, DatasetSpec, Family};
use fiddle::circuit::{
    validate_sequence, Assignment, CircuitTable, DependencyGraph, Gate, GateSequence, HardwareGraph, ProblemInstance,
    Violation,
};
use fiddle::route::{depth_greedy_route, random_route, ActionSpace, NoBonus, RewardConfig, RoutingEnv};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instances() -> Vec<ProblemInstance> {
    let mut all = gen_instances(&DatasetSpec::new(Family::Qaoa, 5, 3, 10, 50, 3)).unwrap();
    all.extend(gen_instances(&DatasetSpec::new(Family::Qml, 5, 3, 10, 50, 4)).unwrap());
    all
}

/// Whether `prefix + gate` can still be completed: the remaining targets are appended in
/// index order (a topological order) and only violations up to `gate` are considered.
fn extends_validly(inst: &ProblemInstance, prefix: &[Gate], placed: &[bool], gate: Gate, target: Option<usize>) -> bool {
    let mut gates = prefix.to_vec();
    gates.push(gate);
    let p = prefix.len();
    gates.extend((0..inst.targets.len()).filter(|&i| !placed[i] && Some(i) != target).map(|i| inst.targets[i]));
    let seq = GateSequence::new(gates, usize::MAX);
    match validate_sequence(&seq, &inst.targets, &inst.deps, &inst.hardware, &inst.phi0) {
        Ok(report) => report.violations.iter().all(|v| match v {
            Violation::Dependency { index, .. } | Violation::Connectivity { index } => *index > p,
            Violation::ExtraneousGate { .. } => false,
            _ => true,
        }),
        Err(_) => false,
    }
}

#[test]
fn mask_agrees_with_validation_on_random_rollouts() {
    let insts = instances();
    let cfg = RewardConfig::default();
    let mut rollouts = 0;
    for (k, inst) in insts.iter().enumerate() {
        let space = ActionSpace::for_instance(inst);
        for r in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64((k * 100 + r) as u64);
            let mut env = RoutingEnv::new(inst, &space).unwrap();
            while !env.is_done() {
                let mask = env.legal_mask();
                assert!(mask.iter().any(|&m| m), "empty mask");
                let phi = env.assignment().clone();
                for (a, &legal) in mask.iter().enumerate() {
                    let act = space.action(a);
                    let expect = if space.is_swap(a) {
                        extends_validly(inst, env.gates(), env.placed(), Gate::swap(phi.logical(act.hu), phi.logical(act.hv.unwrap())), None)
                    } else {
                        (0..inst.targets.len()).any(|i| {
                            !env.placed()[i]
                                && {
                                    let (hu, hv) = env.target_position(i);
                                    space.index_of(inst.targets[i].kind, hu, hv) == Some(a)
                                }
                                && extends_validly(inst, env.gates(), env.placed(), inst.targets[i], Some(i))
                        })
                    };
                    assert_eq!(legal, expect, "instance {k} action {a}");
                }
                let legal = env.legal_actions();
                env.step(*legal.choose(&mut rng).unwrap(), &NoBonus, &cfg).unwrap();
            }
            rollouts += 1;
        }
    }
    assert!(rollouts >= 1000);
}

#[test]
fn episode_return_is_placed_minus_swaps_plus_terminal() {
    let cfg = RewardConfig { beta1: 2.0, beta2: 3.0, gamma: 0.9 };
    let bonus = |t: &CircuitTable| 0.25 + 0.001 * t.depth() as f64;
    for (k, inst) in instances().iter().enumerate() {
        let space = ActionSpace::for_instance(inst);
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let mut env = RoutingEnv::new(inst, &space).unwrap();
        let mut ret = 0.0;
        while !env.is_done() {
            let a = *env.legal_actions().choose(&mut rng).unwrap();
            ret += env.step(a, &bonus, &cfg).unwrap().reward;
        }
        let terminal = if env.is_feasible() {
            cfg.beta2 * bonus(env.table())
        } else {
            -cfg.beta1 * env.unplaced_count() as f64
        };
        let expect = env.placed_count() as f64 - env.swaps() as f64 + terminal;
        assert!((ret - expect).abs() < 1e-12);
        if env.is_feasible() {
            let seq = env.sequence();
            let report = validate_sequence(&seq, &inst.targets, &inst.deps, &inst.hardware, &inst.phi0).unwrap();
            assert!(report.is_valid(), "{report:?}");
        }
    }
}

#[test]
fn depth_greedy_prefers_executable_targets() {
    let cfg = RewardConfig::default();
    for inst in instances() {
        let space = ActionSpace::for_instance(&inst);
        let out = depth_greedy_route(&inst, &space).unwrap();
        let mut env = RoutingEnv::new(&inst, &space).unwrap();
        for g in &out.gates {
            let legal = env.legal_actions();
            let a = if g.is_swap() {
                assert!(legal.iter().all(|&a| space.is_swap(a)), "SWAP chosen while a target was executable");
                let phi = env.assignment();
                space.index_of(g.kind, phi.hardware(g.qu), g.qv.map(|q| phi.hardware(q))).unwrap()
            } else {
                let phi = env.assignment();
                space.index_of(g.kind, phi.hardware(g.qu), g.qv.map(|q| phi.hardware(q))).unwrap()
            };
            env.step(a, &NoBonus, &cfg).unwrap();
        }
        assert!(env.is_done());
    }
}

fn complete_instance(targets: Vec<Gate>, n: usize) -> ProblemInstance {
    let k = targets.len();
    ProblemInstance::new(targets, DependencyGraph::empty(k), HardwareGraph::complete(n), Assignment::identity(n), 10, None)
        .unwrap()
}

#[test]
fn initial_mask_on_complete_hardware() {
    let inst = complete_instance(vec![Gate::rzz(0.1, 0, 2), Gate::rx(0.2, 1), Gate::rzz(0.3, 1, 2)], 3);
    let space = ActionSpace::for_instance(&inst);
    let env = RoutingEnv::new(&inst, &space).unwrap();
    let legal = env.legal_actions();
    assert_eq!(legal.iter().filter(|&&a| space.is_swap(a)).count(), 3);
    assert_eq!(legal.len(), 6);
}

#[test]
fn placing_everything_leaves_only_swaps() {
    let inst = complete_instance(vec![Gate::rzz(0.1, 0, 2)], 3);
    let space = ActionSpace::for_instance(&inst);
    let mut env = RoutingEnv::new(&inst, &space).unwrap();
    let a = env.legal_actions().into_iter().find(|&a| !space.is_swap(a)).unwrap();
    env.step(a, &NoBonus, &RewardConfig::default()).unwrap();
    assert!(env.is_done() && env.is_feasible());
    assert!(env.legal_actions().iter().all(|&a| space.is_swap(a)));
}

#[test]
fn swap_unmasks_distant_target() {
    let inst = ProblemInstance::new(
        vec![Gate::rzz(0.5, 0, 2)],
        DependencyGraph::empty(1),
        HardwareGraph::path(3),
        Assignment::identity(3),
        3,
        None,
    )
    .unwrap();
    let space = ActionSpace::for_instance(&inst);
    let mut env = RoutingEnv::new(&inst, &space).unwrap();
    assert!(env.legal_actions().iter().all(|&a| space.is_swap(a)));
    let out = env.step(space.swap_index(0), &NoBonus, &RewardConfig::default()).unwrap();
    assert_eq!(out.reward, -1.0);
    assert_eq!(env.assignment().as_slice(), &[1, 0, 2]);
    let target = space.index_of(fiddle::circuit::GateKind::Rzz, 1, Some(2)).unwrap();
    assert!(env.legal_mask()[target]);
    let out = env.step(target, &|_: &CircuitTable| 0.5, &RewardConfig::default()).unwrap();
    assert!(out.done);
    assert_eq!(out.reward, 1.0 + 10.0 * 0.5);
}

#[test]
fn exceeding_the_gate_limit_charges_unplaced_targets() {
    let targets = vec![Gate::rzz(0.1, 0, 3), Gate::rzz(0.2, 1, 3), Gate::rzz(0.3, 2, 3), Gate::rzz(0.4, 0, 2)];
    let inst = ProblemInstance::new(
        targets,
        DependencyGraph::empty(4),
        HardwareGraph::path(4),
        Assignment::identity(4),
        1,
        Some(40),
    )
    .unwrap();
    let space = ActionSpace::for_instance(&inst);
    let mut env = RoutingEnv::new(&inst, &space).unwrap();
    let cfg = RewardConfig { beta1: 2.0, ..RewardConfig::default() };
    let first = env.step(space.swap_index(0), &NoBonus, &cfg).unwrap();
    assert_eq!(first, fiddle::route::StepOutcome { reward: -1.0, done: false });
    let second = env.step(space.swap_index(0), &NoBonus, &cfg).unwrap();
    // SWAP penalty plus 2 * 4 unplaced
    assert!(second.done);
    assert_eq!(second.reward, -1.0 - 8.0);
}

/// Probability that uniform choice among `swaps` SWAPs and the executable targets places
/// all `k` independent, always-executable targets within `limit` steps.
fn finish_probability(k: usize, swaps: usize, limit: usize) -> f64 {
    // dist[r] = probability that r targets remain
    let mut dist = vec![0.0; k + 1];
    dist[k] = 1.0;
    for _ in 0..limit {
        let mut next = vec![0.0; k + 1];
        next[0] = dist[0];
        for r in 1..=k {
            let p = r as f64 / (r + swaps) as f64;
            next[r - 1] += dist[r] * p;
            next[r] += dist[r] * (1.0 - p);
        }
        dist = next;
    }
    dist[0]
}

#[test]
fn random_feasibility_on_tiny_complete_instances_matches_markov_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let runs = 4000;
    let inst = complete_instance(vec![Gate::rzz(0.1, 0, 1), Gate::rzz(0.2, 1, 2), Gate::rzz(0.3, 0, 2)], 3);
    let space = ActionSpace::for_instance(&inst);
    let hits = (0..runs).filter(|_| random_route(&inst, &space, &mut rng).unwrap().feasible).count();
    let p = finish_probability(3, 3, 10);
    let rate = hits as f64 / runs as f64;
    let sigma = (p * (1.0 - p) / runs as f64).sqrt();
    assert!((rate - p).abs() < 4.0 * sigma, "rate {rate} vs {p}");
}

#[test]
fn random_routing_with_a_single_swap_slot_finishes_two_targets() {
    // two qubits: one SWAP slot, one RZZ slot; a generous limit makes failure negligible
    let inst = ProblemInstance::new(
        vec![Gate::rzz(0.1, 0, 1), Gate::rx(0.2, 0)],
        DependencyGraph::new(2, vec![(0, 1)]).unwrap(),
        HardwareGraph::complete(2),
        Assignment::identity(2),
        40,
        None,
    )
    .unwrap();
    let space = ActionSpace::for_instance(&inst);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    assert!(finish_probability(2, 1, 40) > 1.0 - 1e-9);
    for _ in 0..200 {
        assert!(random_route(&inst, &space, &mut rng).unwrap().feasible);
    }
}
