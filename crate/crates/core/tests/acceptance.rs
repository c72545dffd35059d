//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. The pipeline criteria train real models and take minutes.

use std::collections::HashMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use fiddle::bench::{gen_instances, DatasetSpec, Family};
use fiddle::circuit::{
    decompose, match_targets, trait_vector, translate, validate_sequence, Assignment, CircuitError, CircuitTable,
    DependencyGraph, Gate, GateKind, GateSequence, HardwareGraph, NativeGate, NativeKind, ProblemInstance,
};
use fiddle::embed::Autoencoder;
use fiddle::nn::{gradient_check, NnError, ParamStore, Tape, Tensor, Var};
use fiddle::noise::{apply_channel, build_channel, circuit_fidelity, DensityMatrix, FidelityMode, NoiseKind, NoiseModel};
use fiddle::pipeline::{Envelope, EvalReport, Pipeline, PipelineConfig, Router, Stage, Workspace};
use fiddle::rl::{ActorNet, CriticNet, NetConfig, Observation};
use fiddle::route::{ActionSpace, NoBonus, RewardConfig, RoutingEnv};
use fiddle::surrogate::{gp_fit, informativeness, select_training_set, Kernel, SelectionConfig};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---- simulator -------------------------------------------------------------

fn random_rho(n: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let d = 1 << n;
    let g = DMatrix::from_fn(d, d, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &g * g.adjoint();
    let m = &m / m.trace();
    let entries = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect();
    DensityMatrix::from_entries(n, entries).unwrap()
}

fn random_table(n: usize, gates: usize, rng: &mut ChaCha8Rng) -> CircuitTable {
    let mut t = CircuitTable::new(n, gates);
    for col in 0..gates {
        let q = rng.random_range(0..n);
        let g = match rng.random_range(0..3) {
            0 if n > 1 => {
                let mut r = rng.random_range(0..n - 1);
                if r >= q {
                    r += 1;
                }
                NativeGate::cx(q, r)
            }
            1 => NativeGate::rz(rng.random_range(0.0..6.3), q),
            _ => NativeGate::rx(rng.random_range(0.0..6.3), q),
        };
        t.place(col, g).unwrap();
    }
    t
}

fn simulator_stays_physical() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_trace, mut worst_eig) = (0.0f64, f64::INFINITY);
    for _ in 0..1000 {
        let n = rng.random_range(1..=3);
        let rho = random_rho(n, &mut rng);
        let kind = NoiseKind::ALL[rng.random_range(0..NoiseKind::ALL.len())];
        let ch = build_channel(kind, rng.random_range(0.0..=1.0)).unwrap();
        let out = apply_channel(&rho, &ch, &[rng.random_range(0..n)]).unwrap();
        worst_trace = worst_trace.max((out.trace() - 1.0).norm());
        worst_eig = worst_eig.min(out.min_eigenvalue());
    }
    let mut worst_fid = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=4);
        let t = random_table(n, 12, &mut rng);
        let f = circuit_fidelity(&t, &NoiseModel::noiseless(), FidelityMode::Exact).unwrap().value;
        worst_fid = worst_fid.max((f - 1.0).abs());
    }
    ensure(
        worst_trace < 1e-12 && worst_eig >= -1e-8 && worst_fid < 1e-9,
        format!("max |tr-1| {worst_trace:.1e}, min eigenvalue {worst_eig:.1e}, noiseless |F-1| {worst_fid:.1e}"),
    )
}

fn monte_carlo_within_three_sigma() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let nm = NoiseModel::uniform(NoiseKind::Depolarizing, 0.01).unwrap();
    let within = (0..50u64)
        .filter(|&i| {
            let t = random_table(2 + i as usize % 2, 15, &mut rng);
            let exact = circuit_fidelity(&t, &nm, FidelityMode::Exact).unwrap().value;
            let mc = circuit_fidelity(&t, &nm, FidelityMode::Mc { samples: 1000, seed: i }).unwrap();
            (mc.value - exact).abs() <= 3.0 * mc.std_error.unwrap()
        })
        .count();
    ensure(within >= 47, format!("{within}/50 within 3 standard errors"))
}

// ---- translation -----------------------------------------------------------

fn random_hardware(n: usize, rng: &mut ChaCha8Rng) -> HardwareGraph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..rng.random_range(0..n) {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        let e = (u.min(v), u.max(v));
        if u != v && !edges.iter().any(|&(a, b)| (a.min(b), a.max(b)) == e) {
            edges.push(e);
        }
    }
    HardwareGraph::new(n, edges).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng) -> ProblemInstance {
    let n = rng.random_range(2..=6);
    let hardware = random_hardware(n, rng);
    let count = rng.random_range(1..=8);
    let targets: Vec<Gate> = (0..count)
        .map(|_| {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            match rng.random_range(0..3) {
                0 => Gate::rzz(rng.random_range(0.0..6.28), a, b),
                1 => Gate::cx(a, b),
                _ => Gate::rx(rng.random_range(0.0..6.28), a),
            }
        })
        .collect();
    let edges = (0..count).flat_map(|j| (0..j).map(move |i| (i, j))).filter(|_| rng.random_bool(0.25)).collect();
    let deps = DependencyGraph::new(count, edges).unwrap();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    ProblemInstance::new(targets, deps, hardware, Assignment::new(perm).unwrap(), 64, Some(400)).unwrap()
}

/// A valid sequence: random ready targets, each walked into place with SWAPs.
fn random_route(inst: &ProblemInstance, rng: &mut ChaCha8Rng) -> Vec<Gate> {
    let mut phi = inst.phi0.clone();
    let mut placed = vec![false; inst.targets.len()];
    let mut seq = Vec::new();
    while placed.iter().any(|p| !p) {
        let ready: Vec<usize> = (0..inst.targets.len())
            .filter(|&t| !placed[t] && inst.deps.parents(t).iter().all(|&p| placed[p]))
            .collect();
        let t = *ready.choose(rng).unwrap();
        let g = inst.targets[t];
        if let Some(qv) = g.qv {
            loop {
                let (hu, hv) = (phi.hardware(g.qu), phi.hardware(qv));
                if inst.hardware.adjacent(hu, hv) {
                    break;
                }
                let next = *inst
                    .hardware
                    .neighbors(hu)
                    .iter()
                    .find(|&&w| inst.hardware.distance(w, hv) < inst.hardware.distance(hu, hv))
                    .unwrap();
                let other = phi.logical(next);
                seq.push(Gate::swap(g.qu, other));
                phi.swap_in_place(g.qu, other).unwrap();
            }
        }
        seq.push(g);
        placed[t] = true;
    }
    seq
}

/// Layer placement by scanning every earlier gate; returns each gate's column span.
fn reference_translate(seq: &[Gate], inst: &ProblemInstance) -> (CircuitTable, Vec<(usize, usize)>) {
    let (matched, _) = match_targets(seq, &inst.targets, &inst.deps);
    let n = inst.n_qubits();
    let mut table = CircuitTable::new(n, inst.depth_limit);
    let mut qubit_layer = vec![0usize; n];
    let mut gate_layer = vec![0usize; seq.len()];
    let mut spans = Vec::new();
    let mut phi = inst.phi0.clone();
    for (i, g) in seq.iter().enumerate() {
        let natives = decompose(g).unwrap();
        let hu = phi.hardware(g.qu);
        let hv = g.qv.map(|q| phi.hardware(q));
        let mut chosen = qubit_layer[hu].max(hv.map_or(0, |h| qubit_layer[h])) + 1;
        for j in 0..i {
            let path = matches!((matched[j], matched[i]), (Some(a), Some(b)) if inst.deps.has_path(a, b));
            if path || g.is_swap() {
                chosen = chosen.max(gate_layer[j] + 1);
            }
        }
        for (j, ng) in natives.iter().enumerate() {
            let mapped = NativeGate { q0: phi.hardware(ng.q0), q1: ng.q1.map(|q| phi.hardware(q)), ..*ng };
            table.place(chosen + j - 1, mapped).unwrap();
        }
        let last = chosen + natives.len() - 1;
        gate_layer[i] = last;
        qubit_layer[hu] = last;
        if let Some(h) = hv {
            qubit_layer[h] = last;
        }
        if g.is_swap() {
            phi.swap_in_place(g.qu, g.qv.unwrap()).unwrap();
        }
        spans.push((chosen, last));
    }
    (table, spans)
}

fn translation_is_consistent() -> Verdict {
    let count = |g: Gate, kind: NativeKind| decompose(&g).unwrap().iter().filter(|n| n.kind == kind).count();
    let rzz = Gate::rzz(0.4, 0, 1);
    if (count(rzz, NativeKind::Cx), count(rzz, NativeKind::Rz), decompose(&rzz).unwrap().len()) != (2, 1, 3) {
        return Err("RZZ does not decompose into 2 CX + 1 RZ".into());
    }
    let swap = Gate::swap(0, 1);
    if (count(swap, NativeKind::Cx), decompose(&swap).unwrap().len()) != (3, 3) {
        return Err("SWAP does not decompose into 3 CX".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut overflowed = 0;
    for case in 0..1000 {
        let inst = random_instance(&mut rng);
        let gates = random_route(&inst, &mut rng);
        let seq = GateSequence::new(gates.clone(), inst.gate_limit);
        let report = validate_sequence(&seq, &inst.targets, &inst.deps, &inst.hardware, &inst.phi0).unwrap();
        if !report.is_valid() {
            return Err(format!("case {case}: generated sequence invalid: {report:?}"));
        }
        let table = match translate(&seq, &inst) {
            Err(CircuitError::DepthOverflow { .. }) => {
                overflowed += 1;
                continue;
            }
            Err(e) => return Err(format!("case {case}: {e}")),
            Ok(t) => t,
        };
        if translate(&seq, &inst).unwrap() != table {
            return Err(format!("case {case}: translation not deterministic"));
        }
        table.check_invariants().map_err(|e| format!("case {case}: {e}"))?;
        let (reference, spans) = reference_translate(&gates, &inst);
        if reference != table {
            return Err(format!("case {case}: table differs from reference placement"));
        }
        let (matched, _) = match_targets(&gates, &inst.targets, &inst.deps);
        let mut span_of = vec![(0, 0); inst.targets.len()];
        for (i, t) in matched.iter().enumerate() {
            if let Some(t) = t {
                span_of[*t] = spans[i];
            }
        }
        if let Some(&(a, b)) = inst.deps.edges().iter().find(|&&(a, b)| span_of[a].1 >= span_of[b].0) {
            return Err(format!("case {case}: dependency {a}->{b} not layered"));
        }
        let natives: usize = gates.iter().map(|g| decompose(g).unwrap().len()).sum();
        if trait_vector(&table).total_gates() != natives {
            return Err(format!("case {case}: gate count mismatch"));
        }
    }
    Ok(format!("1000 sequences, {overflowed} hit the depth limit, decompositions RZZ=2CX+RZ SWAP=3CX"))
}

// ---- gradients -------------------------------------------------------------

fn jitter_biases(store: &mut ParamStore, rng: &mut ChaCha8Rng) {
    for id in store.ids().collect::<Vec<_>>() {
        if store.name(id).ends_with(".b") {
            store.value_mut(id).data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
    }
}

fn check(store: &mut ParamStore, loss: impl Fn(&ParamStore) -> Result<(Tape, Var), NnError>) -> f64 {
    gradient_check(
        store,
        |s| loss(s).map(|(t, l)| t.value(l).item()),
        |s| {
            let (t, l) = loss(s)?;
            let v = t.value(l).item();
            t.backward(l, s)?;
            Ok(v)
        },
        1e-5,
    )
    .unwrap()
    .max_relative_error
}

fn random_embed_table(gh: &HardwareGraph, cols: usize, rng: &mut ChaCha8Rng) -> CircuitTable {
    let mut t = CircuitTable::new(gh.n_qubits(), cols);
    for c in 0..cols {
        for _ in 0..gh.n_qubits() {
            let gate = match rng.random_range(0..3) {
                0 => {
                    let (u, v) = *gh.edges().choose(rng).unwrap();
                    NativeGate::cx(u, v)
                }
                1 => NativeGate::rz(rng.random_range(-3.0..3.0), rng.random_range(0..gh.n_qubits())),
                _ => NativeGate::rx(rng.random_range(-3.0..3.0), rng.random_range(0..gh.n_qubits())),
            };
            let _ = t.place(c, gate);
        }
    }
    t
}

fn first_state(inst: &ProblemInstance, space: &ActionSpace, actor: &ActorNet, rng: &mut ChaCha8Rng) -> Option<Observation> {
    let mut env = RoutingEnv::new(inst, space).unwrap();
    let stop = rng.random_range(0..inst.gate_limit);
    while !env.is_done() && env.t() < stop {
        let a = *env.legal_actions().choose(rng).unwrap();
        env.step(a, &NoBonus, &RewardConfig::default()).unwrap();
    }
    (!env.is_done()).then(|| actor.observer().observe(&env).unwrap())
}

fn gradients_match_finite_differences() -> Verdict {
    let gh = HardwareGraph::path(3);
    let mut autoencoder_worst = 0.0f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let model = Autoencoder::new(&gh, 4, 5, seed).unwrap();
        let cols = model.columns(&random_embed_table(&gh, 4, &mut rng)).unwrap();
        let target: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
        let mut store = model.store().clone();
        jitter_biases(&mut store, &mut rng);
        autoencoder_worst = autoencoder_worst.max(check(&mut store, |s| {
            let mut m = model.clone();
            *m.store_mut() = s.clone();
            m.loss_tape(&cols, &target).map_err(|e| NnError::Checkpoint(e.to_string()))
        }));
    }

    let insts = gen_instances(&DatasetSpec::new(Family::Qaoa, 5, 3, 6, 40, 4)).unwrap();
    let space = ActionSpace::new(&[GateKind::Rzz, GateKind::Rx], &insts[0].hardware);
    let cfg = NetConfig { d_h: 4, hidden: 8 };
    let (mut actor_worst, mut critic_worst, mut checked) = (0.0f64, 0.0f64, 0);
    for (seed, inst) in (0u64..).zip(&insts) {
        if checked == 20 {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let actor = ActorNet::new(&space, &inst.hardware, cfg, seed).unwrap();
        let critic = CriticNet::new(&space, &inst.hardware, cfg, seed + 100).unwrap();
        let Some(obs) = first_state(inst, &space, &actor, &mut rng) else { continue };
        checked += 1;
        let legal: Vec<usize> = (0..space.len()).filter(|&i| obs.mask[i]).collect();
        let action = *legal.choose(&mut rng).unwrap();
        let advantage = rng.random_range(-2.0..2.0);
        let target = critic.value(&obs).unwrap() + rng.random_range(-1.0..1.0);

        let mut store = actor.store().clone();
        jitter_biases(&mut store, &mut rng);
        actor_worst = actor_worst.max(check(&mut store, |s| {
            let mut t = Tape::new();
            let lp = actor.log_probs(&mut t, s, &obs).map_err(|e| NnError::Checkpoint(e.to_string()))?;
            let picked = t.pick(lp, 0, action)?;
            let l = t.scale(picked, -advantage);
            Ok((t, l))
        }));
        let mut store = critic.store().clone();
        jitter_biases(&mut store, &mut rng);
        critic_worst = critic_worst.max(check(&mut store, |s| {
            let mut t = Tape::new();
            let v = critic.value_var(&mut t, s, &obs).map_err(|e| NnError::Checkpoint(e.to_string()))?;
            let y = t.constant(Tensor::scalar(target));
            let l = t.mse(v, y)?;
            Ok((t, l))
        }));
    }
    let worst = autoencoder_worst.max(actor_worst).max(critic_worst);
    ensure(
        checked == 20 && worst <= 1e-4,
        format!(
            "max relative error: encoder+decoder {autoencoder_worst:.1e}, actor {actor_worst:.1e}, critic {critic_worst:.1e} \
             ({checked} policy states)"
        ),
    )
}

// ---- surrogate -------------------------------------------------------------

fn random_latents(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

fn kernels() -> [Kernel; 5] {
    [
        Kernel::Exponential { variance: 0.8, lengthscale: 0.7 },
        Kernel::Rbf { variance: 1.2, lengthscale: 0.5 },
        Kernel::Poly { degree: 2, offset: 1.0 },
        Kernel::Mlp { variance: 1.0, weight: 2.0, bias: 0.5 },
        Kernel::RatQuad { variance: 0.9, lengthscale: 0.6, alpha: 2.0 },
    ]
}

fn gain(z: &[f64], set: &[Vec<f64>], k: &Kernel, gamma2: f64) -> f64 {
    let mut with = set.to_vec();
    with.push(z.to_vec());
    informativeness(&with, k, gamma2).unwrap() - informativeness(set, k, gamma2).unwrap()
}

fn gp_matches_dense_algebra() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_dense = 0.0f64;
    for k in kernels() {
        for _ in 0..20 {
            let n = rng.random_range(1..15);
            let zs = random_latents(&mut rng, n, 4);
            let us: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.0)).collect();
            let gamma2 = 10f64.powf(rng.random_range(-3.0..-1.0));
            let model = gp_fit(zs.clone(), us.clone(), gamma2, k).unwrap();
            let gram = DMatrix::from_fn(n, n, |i, j| k.eval(&zs[i], &zs[j]).unwrap() + if i == j { gamma2 } else { 0.0 });
            let lu = gram.lu();
            let alpha = lu.solve(&DVector::from_column_slice(&us)).unwrap();
            for z in random_latents(&mut rng, 5, 4).iter().chain(&zs) {
                let ks = DVector::from_iterator(n, zs.iter().map(|x| k.eval(x, z).unwrap()));
                let var = (k.eval(z, z).unwrap() - ks.dot(&lu.solve(&ks).unwrap())).max(0.0);
                let (m, v) = model.predict(z).unwrap();
                worst_dense = worst_dense.max((m - ks.dot(&alpha)).abs()).max((v - var).abs());
            }
        }
    }
    let mut worst_interp = 0.0f64;
    for k in [kernels()[0], kernels()[1], kernels()[4]] {
        let zs = random_latents(&mut rng, 12, 6);
        let us: Vec<f64> = (0..12).map(|_| rng.random_range(0.6..1.0)).collect();
        let model = gp_fit(zs.clone(), us.clone(), 0.0, k).unwrap();
        for (z, u) in zs.iter().zip(&us) {
            worst_interp = worst_interp.max((model.predict_mean(z).unwrap() - u).abs());
        }
    }
    let mut violations = 0;
    for i in 0..200 {
        let k = kernels()[i % 5];
        let gamma2 = 10f64.powf(rng.random_range(-3.0..0.0));
        let small_len = rng.random_range(0..4);
        let extra = rng.random_range(0..5);
        let big = random_latents(&mut rng, small_len + extra, 3);
        let z = random_latents(&mut rng, 1, 3).remove(0);
        let (ga, gb) = (gain(&z, &big[..small_len], &k, gamma2), gain(&z, &big, &k, gamma2));
        if ga < -1e-10 || gb < -1e-10 || ga < gb - 1e-10 {
            violations += 1;
        }
    }
    ensure(
        worst_dense < 1e-10 && worst_interp < 1e-6 && violations == 0,
        format!(
            "dense-solve gap {worst_dense:.1e}, interpolation gap {worst_interp:.1e}, \
             {violations}/200 monotone/submodular violations"
        ),
    )
}

fn stochastic_greedy_ratio() -> Verdict {
    let bound = 1.0 - (-1f64).exp() - 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let gamma2 = 1e-2;
    let mut worst = f64::INFINITY;
    for k in kernels() {
        let pool = random_latents(&mut rng, 15, 4);
        let mut opt = f64::NEG_INFINITY;
        for i in 0..15 {
            for j in i + 1..15 {
                for l in j + 1..15 {
                    let set = [pool[i].clone(), pool[j].clone(), pool[l].clone()];
                    opt = opt.max(informativeness(&set, &k, gamma2).unwrap());
                }
            }
        }
        let mean = (0..100)
            .map(|seed| {
                let cfg = SelectionConfig { n_select: 3, epsilon: 0.1, seed };
                let chosen: Vec<Vec<f64>> =
                    select_training_set(&pool, &cfg, &k, gamma2).unwrap().into_iter().map(|i| pool[i].clone()).collect();
                informativeness(&chosen, &k, gamma2).unwrap()
            })
            .sum::<f64>()
            / 100.0;
        worst = worst.min(mean / opt);
    }
    ensure(worst >= bound, format!("worst mean/OPT ratio {worst:.4} over 5 kernels (bound {bound:.4})"))
}

// ---- pipeline --------------------------------------------------------------

const DESK_SEED: u64 = 7;

fn read_csv(path: &Path) -> Vec<HashMap<String, String>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn field(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|e| panic!("{key}={:?}: {e}", row[key]))
}

fn run_pipeline(dir: &Path, cfg: PipelineConfig, stages: &[Stage]) {
    let p = Pipeline::new(Workspace::new(dir), cfg).unwrap();
    for &s in stages {
        let t0 = Instant::now();
        p.run(s).unwrap_or_else(|e| panic!("{s}: {e}"));
        eprintln!("  {s} {:.0}s", t0.elapsed().as_secs_f64());
    }
}

fn latent_correlation(desk: &Path) -> Verdict {
    let rows = read_csv(&desk.join("surrogate/correlation.csv"));
    let r = field(&rows[0], "pearson_r");
    ensure(r > 0.5, format!("pearson r = {r:.4} over {} labeled circuits", rows[0]["circuits"]))
}

/// 500-circuit pool, 300 labels with 50 held out, 250 selected. The encoder trains
/// for 1000 epochs; at the default epoch count the error sits right at the threshold.
fn surrogate_rmse(dir: &Path) -> Verdict {
    let mut cfg = PipelineConfig::desk(DESK_SEED);
    cfg.dataset.encoder_instances = 50;
    cfg.dataset.circuits_per_instance = 10;
    cfg.dataset.rl_train_instances = 1;
    cfg.dataset.rl_test_instances = 1;
    cfg.label.count = 300;
    cfg.label.test_count = 50;
    cfg.select.n_select = 250;
    cfg.embed.epochs = 1000;
    run_pipeline(dir, cfg, &[Stage::Gen, Stage::Label, Stage::TrainEncoder, Stage::Select, Stage::TrainSurrogate]);
    let rows = read_csv(&dir.join("surrogate/rmse.csv"));
    let best = rows.iter().find(|r| r["selected"] == "true").expect("a selected kernel");
    let rmse = field(best, "rmse");
    let all: Vec<String> = rows.iter().map(|r| format!("{} {:.4}", r["kernel"], field(r, "rmse"))).collect();
    ensure(rmse <= 0.03, format!("held-out RMSE {rmse:.4} ({})", all.join(", ")))
}

fn late_feasibility(desk: &Path) -> Verdict {
    let rows = read_csv(&desk.join("rl/train_log.csv"));
    let last = rows.last().unwrap();
    let rate = field(last, "feasibility_rate");
    ensure(rate > 0.9, format!("feasibility {rate:.3} over the interval ending at episode {}", last["episode"]))
}

fn improvement_over_baselines(desk: &Path) -> Verdict {
    let env: Envelope<EvalReport> = serde_json::from_slice(&fs::read(desk.join("eval/summary.json")).unwrap()).unwrap();
    let report = env.body;
    let vs_random = report.comparison(Router::Fiddle, Router::Random).unwrap();
    let fiddle = report.router(Router::Fiddle).unwrap().mean_fidelity;
    let greedy = report.router(Router::DepthGreedy).unwrap().mean_fidelity;
    ensure(
        vs_random.ci_lo > 0.0 && vs_random.mean_difference >= 0.01 && fiddle >= greedy - 0.005,
        format!(
            "fiddle-random {:+.4} CI [{:.4}, {:.4}]; fiddle {fiddle:.4} vs depth-greedy {greedy:.4}",
            vs_random.mean_difference, vs_random.ci_lo, vs_random.ci_hi
        ),
    )
}

fn runs_are_reproducible(a: &Path, b: &Path) -> Verdict {
    let mut compared = vec!["manifest.json".to_string()];
    for dir in ["report", "surrogate", "rl", "eval"] {
        for e in fs::read_dir(a.join(dir)).unwrap() {
            let name = e.unwrap().file_name().to_string_lossy().into_owned();
            if name.ends_with(".csv") {
                compared.push(format!("{dir}/{name}"));
            }
        }
    }
    compared.push("eval/summary.json".into());
    let differing: Vec<&String> = compared.iter().filter(|f| fs::read(a.join(f)).ok() != fs::read(b.join(f)).ok()).collect();
    ensure(differing.is_empty(), format!("{} files compared, differing: {differing:?}", compared.len()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, f: &mut dyn FnMut() -> Verdict| {
        let t0 = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t0.elapsed().as_secs_f64();
        match verdict {
            Ok(d) => println!("PASS {name}: {d} [{secs:.0}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d} [{secs:.0}s]");
            }
        }
    };

    report("simulator physicality", &mut simulator_stays_physical);
    report("monte carlo vs exact", &mut monte_carlo_within_three_sigma);
    report("translation", &mut translation_is_consistent);
    report("gradient checks", &mut gradients_match_finite_differences);
    report("gp posterior", &mut gp_matches_dense_algebra);
    report("stochastic greedy ratio", &mut stochastic_greedy_ratio);

    let (a, b, pool) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut desk_ok = true;
    for dir in [&a, &b] {
        let t0 = Instant::now();
        eprintln!("desk pipeline in {}", dir.path().display());
        let r = catch_unwind(|| run_pipeline(dir.path(), PipelineConfig::desk(DESK_SEED), &Stage::ALL));
        desk_ok &= r.is_ok();
        eprintln!("  total {:.0}s", t0.elapsed().as_secs_f64());
    }
    let desk = a.path();
    let guard = |f: &mut dyn FnMut() -> Verdict| if desk_ok { f() } else { Err("desk pipeline failed".into()) };
    report("latent-fidelity correlation", &mut || guard(&mut || latent_correlation(desk)));
    report("surrogate rmse", &mut || surrogate_rmse(pool.path()));
    report("rl feasibility", &mut || guard(&mut || late_feasibility(desk)));
    report("improvement over baselines", &mut || guard(&mut || improvement_over_baselines(desk)));
    report("reproducibility", &mut || guard(&mut || runs_are_reproducible(a.path(), b.path())));

    if failed == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
