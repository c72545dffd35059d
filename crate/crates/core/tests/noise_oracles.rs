use fiddle::circuit::{CircuitTable, NativeGate, NativeKind};
use fiddle::noise::{
    apply_channel, build_channel, circuit_fidelity, haar_state, hf, native_unitary, pf, pst, run_ideal, run_noisy,
    DensityMatrix, FidelityMode, NoiseKind, NoiseModel, RateOverride, StateVector,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rho(n: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let d = 1 << n;
    let g = DMatrix::from_fn(d, d, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &g * g.adjoint();
    let tr = m.trace();
    let m = m / tr;
    let entries: Vec<C> = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect();
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

/// Lifts a native gate to the full register by brute-force index matching.
fn embed(g: &NativeGate, n: usize) -> DMatrix<C> {
    let local = native_unitary(g.kind, g.angle.unwrap_or(0.0));
    let qubits: Vec<usize> = g.qubits().collect();
    let k = qubits.len();
    let mask: usize = qubits.iter().map(|q| 1 << q).sum();
    let loc = |i: usize| qubits.iter().fold(0, |acc, &q| (acc << 1) | (i >> q & 1));
    let d = 1 << n;
    debug_assert!(k >= 1);
    DMatrix::from_fn(d, d, |r, c| if r & !mask == c & !mask { local[(loc(r), loc(c))] } else { C::new(0.0, 0.0) })
}

fn full_unitary(t: &CircuitTable) -> DMatrix<C> {
    let n = t.rows();
    t.gates().fold(DMatrix::identity(1 << n, 1 << n), |u, (_, g)| embed(g, n) * u)
}

fn to_rho(m: &DMatrix<C>, n: usize) -> DensityMatrix {
    let d = 1 << n;
    DensityMatrix::from_entries(n, (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect())
        .unwrap()
}

fn max_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Generic route: full unitary conjugation per gate, then Kraus channels per acted qubit.
fn run_with_kraus(t: &CircuitTable, rho0: &DensityMatrix, nm: &NoiseModel) -> DensityMatrix {
    let n = rho0.n_qubits();
    let mut rho = rho0.clone();
    for (_, g) in t.gates() {
        let u = embed(g, n);
        rho = to_rho(&(&u * rho.to_matrix() * u.adjoint()), n);
        for q in g.qubits() {
            let ch = build_channel(nm.kind(), nm.rate(q)).unwrap();
            rho = apply_channel(&rho, &ch, &[q]).unwrap();
        }
    }
    rho
}

#[test]
fn depolarizing_population_on_zero_state() {
    let p = 0.008;
    let ch = build_channel(NoiseKind::Depolarizing, p).unwrap();
    let rho = apply_channel(&DensityMatrix::zero_state(1), &ch, &[0]).unwrap();
    assert!((rho.get(0, 0).re - (1.0 - 2.0 * p / 3.0)).abs() < 1e-15);
    assert!((rho.get(0, 0).re - 0.994_666_666_666_666_7).abs() < 1e-12);
}

#[test]
fn bit_flip_on_zero_state_is_diagonal() {
    let p = 0.13;
    let rho = apply_channel(&DensityMatrix::zero_state(1), &build_channel(NoiseKind::BitFlip, p).unwrap(), &[0]).unwrap();
    assert!((rho.get(0, 0).re - (1.0 - p)).abs() < 1e-15);
    assert!((rho.get(1, 1).re - p).abs() < 1e-15);
    assert!(rho.get(0, 1).norm() < 1e-15);
}

#[test]
fn zero_rate_channels_are_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_rho(2, &mut rng);
    for kind in NoiseKind::ALL {
        let out = apply_channel(&rho, &build_channel(kind, 0.0).unwrap(), &[1]).unwrap();
        assert!(max_diff(&out, &rho) < 1e-12, "{kind:?}");
    }
}

#[test]
fn noiseless_run_matches_full_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=3 {
        for _ in 0..10 {
            let t = random_table(n, 12, &mut rng);
            let rho0 = random_rho(n, &mut rng);
            let u = full_unitary(&t);
            let expected = to_rho(&(&u * rho0.to_matrix() * u.adjoint()), n);
            let got = run_noisy(&t, &rho0, &NoiseModel::noiseless()).unwrap();
            assert!(max_diff(&got, &expected) < 1e-10);
        }
    }
}

#[test]
fn fast_kernels_match_generic_kraus_route() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in NoiseKind::ALL {
        let overrides = vec![RateOverride { qubit: 1, rate: 0.2 }];
        let nm = NoiseModel::new(kind, 0.05, overrides).unwrap();
        for _ in 0..4 {
            let t = random_table(3, 10, &mut rng);
            let rho0 = random_rho(3, &mut rng);
            let fast = run_noisy(&t, &rho0, &nm).unwrap();
            let slow = run_with_kraus(&t, &rho0, &nm);
            assert!(max_diff(&fast, &slow) < 1e-12, "{kind:?}");
        }
    }
}

#[test]
fn metric_examples() {
    let p = 0.1;
    let zero = StateVector::basis(1, 0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::new(vec![C::new(s, 0.0), C::new(s, 0.0)]).unwrap();
    let minus = StateVector::new(vec![C::new(s, 0.0), C::new(-s, 0.0)]).unwrap();
    let flipped =
        apply_channel(&DensityMatrix::zero_state(1), &build_channel(NoiseKind::BitFlip, p).unwrap(), &[0]).unwrap();
    let half = DensityMatrix::maximally_mixed(1);

    assert_eq!(pst(&zero, &DensityMatrix::zero_state(1)).unwrap(), 1.0);
    assert!((pst(&zero, &flipped).unwrap() - (1.0 - p)).abs() < 1e-12);
    assert!((pst(&plus, &flipped).unwrap() - 1.0).abs() < 1e-12);

    assert!((hf(&plus, &DensityMatrix::from_pure(&minus)).unwrap() - 1.0).abs() < 1e-12);
    assert!((hf(&zero, &half).unwrap() - 0.5).abs() < 1e-12);
    assert!((hf(&zero, &DensityMatrix::zero_state(1)).unwrap() - 1.0).abs() < 1e-12);

    assert!((pf(&plus, &DensityMatrix::from_pure(&plus)).unwrap() - 1.0).abs() < 1e-12);
    assert!(pf(&plus, &DensityMatrix::from_pure(&minus)).unwrap().abs() < 1e-12);
    assert!((pf(&zero, &flipped).unwrap() - (1.0 - p)).abs() < 1e-12);

    assert!(pf(&zero, &DensityMatrix::zero_state(2)).is_err());
}

#[test]
fn hellinger_dominates_overlap_for_diagonal_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let psi = haar_state(n, &mut rng);
        let d = 1 << n;
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        let mut entries = vec![C::new(0.0, 0.0); d * d];
        for i in 0..d {
            entries[i * d + i] = C::new(w[i] / total, 0.0);
        }
        let rho = DensityMatrix::from_entries(n, entries).unwrap();
        assert!(hf(&psi, &rho).unwrap() + 1e-12 >= pf(&psi, &rho).unwrap());
    }
}

#[test]
fn fully_depolarized_qubit_has_half_average_fidelity() {
    let mut t = CircuitTable::new(1, 1);
    t.place(0, NativeGate::rx(0.0, 0)).unwrap();
    let nm = NoiseModel::uniform(NoiseKind::Depolarizing, 0.75).unwrap();
    let f = circuit_fidelity(&t, &nm, FidelityMode::Exact).unwrap();
    assert!((f.value - 0.5).abs() < 1e-12);
}

#[test]
fn empty_circuit_under_noise_is_perfect() {
    let nm = NoiseModel::uniform(NoiseKind::BitFlip, 0.3).unwrap();
    let t = CircuitTable::new(3, 4);
    assert!((circuit_fidelity(&t, &nm, FidelityMode::Exact).unwrap().value - 1.0).abs() < 1e-12);
    let mc = circuit_fidelity(&t, &nm, FidelityMode::Mc { samples: 20, seed: 2 }).unwrap();
    assert!((mc.value - 1.0).abs() < 1e-12);
}

#[test]
fn exact_fidelity_matches_direct_average_for_one_qubit() {
    // Average fidelity of a single-qubit channel equals the mean over the six
    // Pauli eigenstates (a 2-design).
    let mut t = CircuitTable::new(1, 3);
    t.place(0, NativeGate::rx(0.7, 0)).unwrap();
    t.place(1, NativeGate::rz(1.1, 0)).unwrap();
    let nm = NoiseModel::uniform(NoiseKind::Mix, 0.07).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let states = [
        [C::new(1.0, 0.0), C::new(0.0, 0.0)],
        [C::new(0.0, 0.0), C::new(1.0, 0.0)],
        [C::new(s, 0.0), C::new(s, 0.0)],
        [C::new(s, 0.0), C::new(-s, 0.0)],
        [C::new(s, 0.0), C::new(0.0, s)],
        [C::new(s, 0.0), C::new(0.0, -s)],
    ];
    let avg: f64 = states
        .iter()
        .map(|a| {
            let psi = StateVector::new(a.to_vec()).unwrap();
            let ideal = run_ideal(&t, &psi).unwrap();
            pf(&ideal, &run_noisy(&t, &DensityMatrix::from_pure(&psi), &nm).unwrap()).unwrap()
        })
        .sum::<f64>()
        / 6.0;
    let exact = circuit_fidelity(&t, &nm, FidelityMode::Exact).unwrap().value;
    assert!((exact - avg).abs() < 1e-12, "{exact} vs {avg}");
}

#[test]
fn monte_carlo_agrees_with_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let nm = NoiseModel::uniform(NoiseKind::Depolarizing, 0.01).unwrap();
    let mut within = 0;
    for i in 0..50 {
        let n = 2 + i % 2;
        let t = random_table(n, 15, &mut rng);
        let exact = circuit_fidelity(&t, &nm, FidelityMode::Exact).unwrap().value;
        let mc = circuit_fidelity(&t, &nm, FidelityMode::Mc { samples: 1000, seed: i as u64 }).unwrap();
        if (mc.value - exact).abs() <= 3.0 * mc.std_error.unwrap() {
            within += 1;
        }
    }
    assert!(within >= 47, "{within}/50");
}

#[test]
fn haar_states_have_zero_mean_magnetization() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let samples = 10_000;
    let mean: f64 = (0..samples)
        .map(|_| {
            let psi = haar_state(2, &mut rng);
            psi.amplitudes().iter().enumerate().map(|(i, a)| if i & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() }).sum::<f64>()
        })
        .sum::<f64>()
        / samples as f64;
    assert!(mean.abs() < 4.0 / (samples as f64).sqrt());
}

#[test]
fn fidelity_estimate_serializes_with_expected_fields() {
    let t = CircuitTable::new(1, 1);
    let est = circuit_fidelity(&t, &NoiseModel::noiseless(), FidelityMode::Mc { samples: 3, seed: 4 }).unwrap();
    let v: serde_json::Value = serde_json::to_value(&est).unwrap();
    for key in ["value", "std_error", "mode", "samples", "seed"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn native_kinds_are_covered_by_the_catalog() {
    assert_eq!(native_unitary(NativeKind::Cx, 0.0).nrows(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channels_preserve_trace_hermiticity_and_positivity(seed in any::<u64>(), p in 0.0f64..=1.0, k in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_rho(2, &mut rng);
        let out = apply_channel(&rho, &build_channel(NoiseKind::ALL[k], p).unwrap(), &[rng.random_range(0..2)]).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(out.hermiticity_error() < 1e-10);
        prop_assert!(out.min_eigenvalue() >= -1e-8);
    }

    #[test]
    fn noisy_runs_stay_physical_and_metrics_bounded(seed in any::<u64>(), p in 0.0f64..0.5, k in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_table(3, 8, &mut rng);
        let nm = NoiseModel::uniform(NoiseKind::ALL[k], p).unwrap();
        let psi = haar_state(3, &mut rng);
        let rho = run_noisy(&t, &DensityMatrix::from_pure(&psi), &nm).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.hermiticity_error() < 1e-10);
        prop_assert!(rho.min_eigenvalue() >= -1e-8);
        let ideal = run_ideal(&t, &psi).unwrap();
        for v in [pst(&ideal, &rho).unwrap(), hf(&ideal, &rho).unwrap(), pf(&ideal, &rho).unwrap()] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let f = circuit_fidelity(&t, &nm, FidelityMode::Exact).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&f));
    }
}
