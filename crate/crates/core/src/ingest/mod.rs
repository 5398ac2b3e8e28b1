//! Audio loading, resampling and fixed-window segmentation.

mod resample;
mod segment;
mod wav;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use resample::{resample, resample_samples, resampled_len, ResampleConfig};
pub use segment::segment;
pub use wav::{encode_wav_pcm16, load_wav, load_wav_with, ClampPolicy, LoadStats};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt WAV header: {0}")]
    CorruptHeader(String),
    #[error("empty audio file: {0}")]
    EmptyFile(String),
    #[error("{clipped} of {total} samples exceed full scale")]
    ExcessiveClipping { clipped: usize, total: usize },
    #[error("non-finite sample at position {0}")]
    NonFiniteSample(usize),
    #[error("invalid segmentation: {0}")]
    InvalidSegmentation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identifies one snippet within the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SnippetRef {
    pub clip_id: String,
    pub index: u32,
}

impl SnippetRef {
    pub fn new(clip_id: impl Into<String>, index: u32) -> Self {
        Self {
            clip_id: clip_id.into(),
            index,
        }
    }
}

impl std::fmt::Display for SnippetRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}", self.clip_id, self.index)
    }
}

/// A mono recording held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip<T: Scalar = f64> {
    pub id: String,
    pub samples: Vec<T>,
    pub sample_rate: u32,
    pub source_path: String,
    pub start_timestamp: Option<String>,
}

impl<T: Scalar> AudioClip<T> {
    pub fn new(id: impl Into<String>, samples: Vec<T>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Self {
            id: id.into(),
            samples,
            sample_rate,
            source_path: String::new(),
            start_timestamp: None,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// A fixed-length window cut from a clip. `samples.len()` always equals
/// `rate * duration_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snippet<T: Scalar = f64> {
    pub clip_id: String,
    pub index: u32,
    pub samples: Vec<T>,
    pub rate: u32,
    pub duration_s: f64,
    /// Start of the window within the parent clip, in seconds.
    pub offset_s: f64,
}

impl<T: Scalar> Snippet<T> {
    pub fn snippet_ref(&self) -> SnippetRef {
        SnippetRef::new(self.clip_id.clone(), self.index)
    }
}
