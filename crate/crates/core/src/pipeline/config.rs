use serde::{Deserialize, Serialize};

use super::{PipelineError, Router};
use crate::bench::{DatasetSpec, Family};
use crate::circuit::GateKind;
use crate::embed::EmbedTrainConfig;
use crate::noise::{FidelityMode, NoiseModel, EXACT_QUBIT_CAP};
use crate::rl::RlConfig;
use crate::surrogate::{HyperGrid, KernelKind};

/// Instance family and sizes for every dataset the pipeline draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub family: Family,
    pub n_qubits: usize,
    pub min_targets: usize,
    pub max_targets: usize,
    #[serde(default)]
    pub grid: Option<(usize, usize)>,
    /// Instances whose random routes train the encoder and surrogate.
    pub encoder_instances: usize,
    pub circuits_per_instance: usize,
    pub rl_train_instances: usize,
    pub rl_test_instances: usize,
}

impl DatasetConfig {
    pub fn spec(&self, count: usize, seed: u64) -> DatasetSpec {
        DatasetSpec { grid: self.grid, ..DatasetSpec::new(self.family, self.n_qubits, self.min_targets, self.max_targets, count, seed) }
    }

    pub fn gate_set(&self) -> Vec<GateKind> {
        match self.family {
            Family::Qaoa => vec![GateKind::Rzz, GateKind::Rx],
            Family::Qml => vec![GateKind::Rzz, GateKind::Cx],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Exact up to the simulator's qubit cap, Monte Carlo beyond.
    Auto,
    Exact,
    Mc,
}

/// How circuit fidelities are measured for labels and evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub noise: NoiseModel,
    pub mode: OracleMode,
    pub samples: usize,
}

impl OracleConfig {
    pub fn fidelity_mode(&self, n_qubits: usize, seed: u64) -> FidelityMode {
        let exact = match self.mode {
            OracleMode::Exact => true,
            OracleMode::Mc => false,
            OracleMode::Auto => n_qubits <= EXACT_QUBIT_CAP,
        };
        if exact {
            FidelityMode::Exact
        } else {
            FidelityMode::Mc { samples: self.samples, seed }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    /// Circuits drawn from the encoder pool and measured.
    pub count: usize,
    /// Labeled circuits held out for surrogate evaluation.
    pub test_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub n_select: usize,
    pub epsilon: f64,
    pub gamma2: f64,
    /// Kernel at its unit defaults; selection runs before any fit.
    pub kernel: KernelKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub kernels: Vec<KernelKind>,
    pub grid: HyperGrid,
    /// Rescale each latent dimension to zero mean and unit variance over the training
    /// subset before fitting.
    pub standardize_latents: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub routers: Vec<Router>,
    /// Seeds tried per instance by the random baseline before giving up.
    pub random_attempts: usize,
    pub bootstrap_resamples: usize,
    pub confidence: f64,
}

/// Complete configuration of a pipeline run. `seed` has no default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub oracle: OracleConfig,
    pub label: LabelConfig,
    pub embed: EmbedTrainConfig,
    pub select: SelectConfig,
    pub surrogate: SurrogateConfig,
    pub rl: RlConfig,
    pub eval: EvalConfig,
}

impl PipelineConfig {
    /// Stage sizes of the full experiment on QAOA with five qubits.
    pub fn full(seed: u64) -> Self {
        PipelineConfig {
            seed,
            dataset: DatasetConfig {
                family: Family::Qaoa,
                n_qubits: 5,
                min_targets: 3,
                max_targets: 15,
                grid: None,
                encoder_instances: 100,
                circuits_per_instance: 50,
                rl_train_instances: 100,
                rl_test_instances: 100,
            },
            oracle: OracleConfig { noise: NoiseModel::preset("depolarizing").expect("preset"), mode: OracleMode::Auto, samples: 500 },
            label: LabelConfig { count: 300, test_count: 50 },
            embed: EmbedTrainConfig::with_seed(seed),
            select: SelectConfig { n_select: 250, epsilon: 0.05, gamma2: 1e-2, kernel: KernelKind::Exponential },
            surrogate: SurrogateConfig {
                kernels: KernelKind::ALL.to_vec(),
                grid: HyperGrid::default(),
                standardize_latents: true,
            },
            rl: RlConfig::with_seed(seed),
            eval: EvalConfig {
                routers: Router::ALL.to_vec(),
                random_attempts: 1000, bootstrap_resamples: 10_000, confidence: 0.95,
            },
        }
    }

    /// Scaled-down sizes that finish in minutes: 20 encoder instances with 10 circuits
    /// each, 60 labels, targets in 3..=6.
    pub fn desk(seed: u64) -> Self {
        let mut cfg = PipelineConfig::full(seed);
        cfg.dataset.max_targets = 6;
        cfg.dataset.encoder_instances = 20;
        cfg.dataset.circuits_per_instance = 10;
        cfg.label = LabelConfig { count: 60, test_count: 12 };
        cfg.select.n_select = 40;
        cfg
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let d = &self.dataset;
        self.dataset.spec(1, self.seed).validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if d.encoder_instances == 0 || d.circuits_per_instance == 0 || d.rl_train_instances == 0 || d.rl_test_instances == 0 {
            return bad("dataset sizes must be positive".into());
        }
        let pool = d.encoder_instances * d.circuits_per_instance;
        if self.label.count > pool {
            return bad(format!("{} labels requested from a pool of {pool} circuits", self.label.count));
        }
        if self.label.test_count >= self.label.count {
            return bad("test_count must leave labeled circuits for training".into());
        }
        if self.select.n_select == 0 || self.select.n_select > self.label.count - self.label.test_count {
            return bad(format!(
                "n_select {} must lie in 1..={}",
                self.select.n_select,
                self.label.count - self.label.test_count
            ));
        }
        if !(self.select.epsilon > 0.0 && self.select.epsilon < 1.0) || !(self.select.gamma2 > 0.0) {
            return bad("selection needs epsilon in (0, 1) and gamma2 > 0".into());
        }
        if self.surrogate.kernels.is_empty() {
            return bad("no surrogate kernels listed".into());
        }
        if self.oracle.mode != OracleMode::Exact && self.oracle.samples == 0 {
            return bad("Monte Carlo oracle needs samples > 0".into());
        }
        if self.oracle.mode == OracleMode::Exact && d.n_qubits > EXACT_QUBIT_CAP {
            return bad(format!("exact oracle supports at most {EXACT_QUBIT_CAP} qubits"));
        }
        if self.eval.routers.is_empty() {
            return bad("no routers listed for evaluation".into());
        }
        if self.eval.random_attempts == 0 {
            return bad("random_attempts must be positive".into());
        }
        if !(self.eval.confidence > 0.0 && self.eval.confidence < 1.0) || self.eval.bootstrap_resamples == 0 {
            return bad("eval needs confidence in (0, 1) and at least one resample".into());
        }
        self.embed.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.rl.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }
}
