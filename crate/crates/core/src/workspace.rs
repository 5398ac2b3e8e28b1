//! File layout of a working directory. The command line tool, the service
//! and scripted runs all read and write the same names.

use std::path::{Path, PathBuf};

use crate::reduce::Method;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.jsonl")
    }

    pub fn labels(&self) -> PathBuf {
        self.root.join("labels.jsonl")
    }

    pub fn embeddings(&self) -> PathBuf {
        self.root.join("emb.bin")
    }

    pub fn projection(&self, method: Method) -> PathBuf {
        self.root.join(format!("projection_{method}.jsonl"))
    }

    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset.json")
    }

    pub fn model(&self) -> PathBuf {
        self.root.join("model.json")
    }

    /// Predictions for every embedded snippet.
    pub fn predictions(&self) -> PathBuf {
        self.root.join("predictions.jsonl")
    }

    /// Predictions for the held-out test split, written by training.
    pub fn test_predictions(&self) -> PathBuf {
        self.root.join("test_predictions.jsonl")
    }

    /// Labels of the held-out test split.
    pub fn test_truth(&self) -> PathBuf {
        self.root.join("test_truth.jsonl")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn audio_dir(&self) -> PathBuf {
        self.root.join("audio")
    }
}
