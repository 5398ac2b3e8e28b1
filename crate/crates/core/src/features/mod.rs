//! Mel-spectrograms, the 1,280-d reference embedding and the embedding
//! exchange file format.

mod embed;
mod exchange;
mod mel;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::SnippetRef;
use crate::scalar::Scalar;

pub use embed::{embed_reference, BandStat, STATS_PER_BAND};
pub use exchange::{import_embeddings, read_embeddings, write_embeddings, MAGIC};
pub use mel::{hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz, FeatureConfig, MelSpectrogram};

/// Dimensionality of every embedding in the pipeline.
pub const EMBEDDING_DIM: usize = 1280;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("snippet rate {found} Hz does not match configured {expected} Hz")]
    RateMismatch { expected: u32, found: u32 },
    #[error("snippet of {0} samples is shorter than one FFT frame")]
    TooShort(usize),
    #[error("expected {expected} mel bands, found {found}")]
    BandCountMismatch { expected: usize, found: usize },
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed embedding file: {0}")]
    ParseError(String),
    #[error("duplicate snippet reference {0}")]
    DuplicateSnippetRef(SnippetRef),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provider {
    Reference,
    Imported,
}

/// Feature vector summarising one snippet.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T: Scalar = f64> {
    pub snippet: SnippetRef,
    pub vector: Vec<T>,
    pub provider: Provider,
}

impl<T: Scalar> AsRef<[T]> for Embedding<T> {
    fn as_ref(&self) -> &[T] {
        &self.vector
    }
}
