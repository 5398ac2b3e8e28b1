//! Snippet manifests, the append-only label log and training-set export.

mod export;
mod labels;
mod manifest;

use thiserror::Error;

use crate::ingest::SnippetRef;

pub use export::{export_training_set, DatasetEntry, DatasetManifest, ExportConfig};
pub use labels::{now_timestamp, LabelRecord, LabelState, LabelStore, Provenance, Upsert};
pub use manifest::{read_manifest, write_manifest, Manifest, ManifestEntry};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown snippet {0}")]
    UnknownSnippet(SnippetRef),
    #[error("illegal transition for {snippet}/{class}: {from} -> {to}")]
    IllegalTransition {
        snippet: SnippetRef,
        class: String,
        from: String,
        to: String,
    },
    #[error("invalid class name {0:?}")]
    InvalidClass(String),
    #[error("no requested class has at least {min_count} accepted labels")]
    NoClassSurvives { min_count: usize },
    #[error("invalid export config: {0}")]
    InvalidConfig(String),
    #[error("duplicate manifest entry {0}")]
    DuplicateSnippet(SnippetRef),
    #[error("{path} line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
