use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::kernels::C;
use super::{pf, run_ideal, run_noisy, DensityMatrix, NoiseError, NoiseModel, StateVector};
use crate::circuit::CircuitTable;

/// Largest circuit (in qubits) the exact mode accepts; it simulates twice as many.
pub const EXACT_QUBIT_CAP: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FidelityMode {
    Exact,
    Mc { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub value: f64,
    pub std_error: Option<f64>,
    pub mode: String,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

/// Haar-random pure state: normalized i.i.d. complex Gaussian amplitudes.
pub fn haar_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    let amps: Vec<C> =
        (0..1usize << n).map(|_| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_raw(n, amps.into_iter().map(|a| a / norm).collect())
}

/// Haar-averaged overlap between ideal and noisy execution of `table`.
///
/// Exact mode purifies onto a doubled register: it evolves a maximally entangled state
/// through the noisy circuit on the system half, reads the entanglement fidelity `F`
/// against the ideally evolved state, and converts with `(dF + 1) / (d + 1)`.
pub fn circuit_fidelity(table: &CircuitTable, nm: &NoiseModel, mode: FidelityMode) -> Result<FidelityEstimate, NoiseError> {
    let n = table.rows();
    match mode {
        FidelityMode::Exact => {
            if n > EXACT_QUBIT_CAP {
                return Err(NoiseError::Capacity { n, cap: EXACT_QUBIT_CAP });
            }
            let d = 1usize << n;
            let mut amps = vec![C::new(0.0, 0.0); d * d];
            let w = C::new(1.0 / (d as f64).sqrt(), 0.0);
            for i in 0..d {
                amps[i | i << n] = w;
            }
            let phi = StateVector::from_raw(2 * n, amps);
            let target = run_ideal(table, &phi)?;
            let rho = run_noisy(table, &DensityMatrix::from_pure(&phi), nm)?;
            let entanglement = pf(&target, &rho)?;
            let df = d as f64;
            Ok(FidelityEstimate {
                value: ((df * entanglement + 1.0) / (df + 1.0)).clamp(0.0, 1.0),
                std_error: None,
                mode: "exact".into(),
                samples: None,
                seed: None,
            })
        }
        FidelityMode::Mc { samples, seed } => {
            if samples == 0 {
                return Err(NoiseError::NoSamples);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut values = Vec::with_capacity(samples);
            for _ in 0..samples {
                let psi = haar_state(n, &mut rng);
                let ideal = run_ideal(table, &psi)?;
                let rho = run_noisy(table, &DensityMatrix::from_pure(&psi), nm)?;
                values.push(pf(&ideal, &rho)?);
            }
            let mean = values.iter().sum::<f64>() / samples as f64;
            let var = if samples > 1 {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64
            } else {
                0.0
            };
            Ok(FidelityEstimate {
                value: mean,
                std_error: Some((var / samples as f64).sqrt()),
                mode: "mc".into(),
                samples: Some(samples),
                seed: Some(seed),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::NativeGate;
    use crate::noise::NoiseKind;

    #[test]
    fn noiseless_circuit_has_unit_fidelity() {
        let mut t = CircuitTable::new(2, 3);
        t.place(0, NativeGate::cx(0, 1)).unwrap();
        t.place(1, NativeGate::rx(0.4, 1)).unwrap();
        let f = circuit_fidelity(&t, &NoiseModel::noiseless(), FidelityMode::Exact).unwrap();
        assert!((f.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn capacity_limit() {
        let t = CircuitTable::new(6, 1);
        let err = circuit_fidelity(&t, &NoiseModel::noiseless(), FidelityMode::Exact).unwrap_err();
        assert_eq!(err, NoiseError::Capacity { n: 6, cap: 5 });
        let nm = NoiseModel::uniform(NoiseKind::BitFlip, 0.1).unwrap();
        assert!(circuit_fidelity(&t, &nm, FidelityMode::Mc { samples: 2, seed: 1 }).is_ok());
    }

    #[test]
    fn haar_states_are_normalized_and_seeded() {
        let a = haar_state(3, &mut ChaCha8Rng::seed_from_u64(9));
        let b = haar_state(3, &mut ChaCha8Rng::seed_from_u64(9));
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_eq!(a, b);
    }
}
