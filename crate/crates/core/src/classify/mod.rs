//! Softmax classifier head over embeddings: splitting, training, inference.

mod model;
mod split;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::SnippetRef;

pub use model::{
    decide_argmax, decide_threshold, read_predictions, softmax, write_predictions, ClassifierModel,
    Prediction,
};
pub use split::{split, Split, SplitSpec};
pub use train::{loss_and_gradient, train, Gradient, TrainConfig, TrainMeta};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("class index {class} has {count} examples, need at least 3 for a stratified split")]
    ClassTooSmall { class: usize, count: usize },
    #[error("split fractions must be non-negative and sum to 1, got {0:?}")]
    InvalidSplit([f64; 3]),
    #[error("training data holds fewer than two classes")]
    SingleClassInput,
    #[error("loss became non-finite at epoch {epoch} (last finite loss {last})")]
    NonFiniteLoss { epoch: usize, last: f64 },
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("{line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An embedding with its class index into some class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeled<T = f64> {
    pub snippet: SnippetRef,
    pub vector: Vec<T>,
    pub class: usize,
}
