//! Small reverse-mode autodiff over 2-D tensors, parameter storage and plain SGD.

mod gradcheck;
mod layers;
mod params;
mod tape;
mod tensor;

pub use gradcheck::{gradient_check, GradCheckReport};
pub use layers::Affine;
pub use params::{sgd_step, Checkpoint, ParamEntry, ParamId, ParamStore};
pub use tape::{Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    Shape { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("backward needs a 1x1 loss, got {0:?}")]
    NonScalarLoss((usize, usize)),
    #[error("loss does not depend on any parameter")]
    Detached,
    #[error("non-finite gradient in parameter {0}")]
    NonFiniteGradient(String),
    #[error("non-finite loss {0}")]
    NonFiniteLoss(f64),
    #[error("masked softmax with no legal entries")]
    EmptyMask,
    #[error("index {index} out of range for {len}")]
    Index { index: usize, len: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("unknown parameter {0}")]
    UnknownParam(String),
}
