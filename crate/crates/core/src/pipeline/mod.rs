//! File-based experiment pipeline: every stage reads and writes artifacts under a work
//! directory and records content hashes in `manifest.json`.

mod artifacts;
mod config;
mod estimator;
mod stages;

pub use artifacts::{sha256_hex, Envelope, Header, Manifest, StageRecord, Workspace};
pub use config::{
    DatasetConfig, EvalConfig, LabelConfig, OracleConfig, OracleMode, PipelineConfig, SelectConfig, SurrogateConfig,
};
pub use estimator::{LatentSurrogate, SurrogateArtifact};
pub use stages::{
    gen_instance_files, route_instance, run_stage, CircuitRecord, EvalReport, LabelRecord, Pipeline, RouteRecord, Router,
    RouterSummary, Comparison, Split, StageStatus, TrainLogRow,
};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bench::BenchError;
use crate::embed::EmbedError;
use crate::nn::NnError;
use crate::noise::NoiseError;
use crate::rl::RlError;
use crate::route::RouteError;
use crate::surrogate::SurrogateError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing {path}; run `fiddle {stage}` first")]
    MissingPrerequisite { path: String, stage: &'static str },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{0}")]
    Stage(String),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

impl PipelineError {
    /// Process exit status: 2 for configuration problems, 3 for a missing upstream
    /// artifact, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::MissingPrerequisite { .. } => 3,
            _ => 1,
        }
    }
}

/// Pipeline stages in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Gen,
    Label,
    TrainEncoder,
    Select,
    TrainSurrogate,
    TrainRl,
    Route,
    Eval,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Gen,
        Stage::Label,
        Stage::TrainEncoder,
        Stage::Select,
        Stage::TrainSurrogate,
        Stage::TrainRl,
        Stage::Route,
        Stage::Eval,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Gen => "gen",
            Stage::Label => "label",
            Stage::TrainEncoder => "train-encoder",
            Stage::Select => "select",
            Stage::TrainSurrogate => "train-surrogate",
            Stage::TrainRl => "train-rl",
            Stage::Route => "route",
            Stage::Eval => "eval",
            Stage::Report => "report",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Independent seed for one task, derived from the run seed, a purpose tag and an index.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
