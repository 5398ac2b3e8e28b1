//! One-vs-rest scoring, threshold sweeps and report files.

mod metrics;
mod report;

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::SnippetRef;
use crate::store::LabelState;

pub use metrics::{
    argmax_confusion, confusion, default_grid, parse_grid, prf, sweep, ConfusionCounts, Prf, SweepCurve, SweepRow,
};
pub use report::{read_sweep_csv, write_report, ReportFiles, Summary};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions and truth disagree on {missing} missing and {extra} extra snippets (first: {example})")]
    RefMismatch { missing: usize, extra: usize, example: String },
    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error("no predictions to score")]
    NoPredictions,
    #[error("invalid threshold grid: {0}")]
    InvalidGrid(String),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("{line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ground-truth class per snippet.
pub type Truth = BTreeMap<SnippetRef, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub clip_id: String,
    #[serde(alias = "snippet_index")]
    pub index: u32,
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<LabelState>,
}

/// Reads `{clip_id, index, class}` lines. Label-log lines are accepted too;
/// only their `accepted` records count.
pub fn read_truth(path: impl AsRef<Path>) -> Result<Truth, EvalError> {
    let reader = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Truth::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: TruthRecord =
            serde_json::from_str(&line).map_err(|e| EvalError::Parse { line: i + 1, msg: e.to_string() })?;
        if matches!(r.state, None | Some(LabelState::Accepted)) {
            out.insert(SnippetRef::new(r.clip_id, r.index), r.class);
        }
    }
    Ok(out)
}

pub fn write_truth(path: impl AsRef<Path>, truth: &Truth) -> Result<(), EvalError> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (s, class) in truth {
        let r = TruthRecord { clip_id: s.clip_id.clone(), index: s.index, class: class.clone(), state: None };
        serde_json::to_writer(&mut w, &r).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
