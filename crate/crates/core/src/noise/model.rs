use serde::{Deserialize, Serialize};

use super::kernels::PauliWeights;
use super::{NoiseError, NoiseKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateOverride {
    pub qubit: usize,
    pub rate: f64,
}

/// One noise kind with a per-qubit error rate; qubits without an override use `default_rate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct NoiseModel {
    kind: NoiseKind,
    default_rate: f64,
    overrides: Vec<RateOverride>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    kind: NoiseKind,
    #[serde(default)]
    default_rate: f64,
    #[serde(default)]
    overrides: Vec<RateOverride>,
}

impl TryFrom<RawModel> for NoiseModel {
    type Error = NoiseError;
    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        NoiseModel::new(raw.kind, raw.default_rate, raw.overrides)
    }
}

impl From<NoiseModel> for RawModel {
    fn from(m: NoiseModel) -> Self {
        RawModel { kind: m.kind, default_rate: m.default_rate, overrides: m.overrides }
    }
}

const HIGH_RATE: f64 = 0.008;
const LOW_RATE: f64 = 0.002;

impl NoiseModel {
    pub fn new(kind: NoiseKind, default_rate: f64, overrides: Vec<RateOverride>) -> Result<Self, NoiseError> {
        for p in std::iter::once(default_rate).chain(overrides.iter().map(|o| o.rate)) {
            if !(0.0..=1.0).contains(&p) {
                return Err(NoiseError::InvalidProbability(p));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(o) = overrides.iter().find(|o| !seen.insert(o.qubit)) {
            return Err(NoiseError::InvalidConfig(format!("qubit {} overridden twice", o.qubit)));
        }
        Ok(NoiseModel { kind, default_rate, overrides })
    }

    pub fn noiseless() -> Self {
        NoiseModel { kind: NoiseKind::None, default_rate: 0.0, overrides: Vec::new() }
    }

    pub fn uniform(kind: NoiseKind, rate: f64) -> Result<Self, NoiseError> {
        NoiseModel::new(kind, rate, Vec::new())
    }

    /// Hardware qubits 0 and 1 at the high rate (0.008), every other qubit at 0.002.
    pub fn two_hot(kind: NoiseKind) -> Self {
        let overrides = (0..2).map(|qubit| RateOverride { qubit, rate: HIGH_RATE }).collect();
        NoiseModel { kind, default_rate: LOW_RATE, overrides }
    }

    /// Named presets: the five noise kinds in the two-hot pattern, plus `real`, a mixed
    /// model read from the shipped `presets/real_noise.json`.
    pub fn preset(name: &str) -> Result<Self, NoiseError> {
        if name == "real" {
            return serde_json::from_str(include_str!("../../presets/real_noise.json"))
                .map_err(|e| NoiseError::InvalidConfig(e.to_string()));
        }
        match name.parse::<NoiseKind>()? {
            NoiseKind::None => Ok(NoiseModel::noiseless()),
            kind => Ok(NoiseModel::two_hot(kind)),
        }
    }

    pub fn from_json(s: &str) -> Result<Self, NoiseError> {
        serde_json::from_str(s).map_err(|e| NoiseError::InvalidConfig(e.to_string()))
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn rate(&self, qubit: usize) -> f64 {
        if self.kind == NoiseKind::None {
            return 0.0;
        }
        self.overrides.iter().find(|o| o.qubit == qubit).map_or(self.default_rate, |o| o.rate)
    }

    pub(crate) fn pauli_weights(&self, qubit: usize) -> PauliWeights {
        self.kind.pauli_weights(self.rate(qubit))
    }
}
