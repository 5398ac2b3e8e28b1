use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalError, Prf, SweepCurve, SweepRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub target: String,
    pub best_tau: f64,
    pub best_f1: f64,
    pub rows: usize,
    /// Scores of the argmax rule, when computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax: Option<Prf>,
}

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

/// Writes `sweep.csv`, `summary.json` and `plot.json` (one series per metric
/// keyed by threshold) into `dir`.
pub fn write_report(curve: &SweepCurve, argmax: Option<Prf>, dir: impl AsRef<Path>) -> Result<ReportFiles, EvalError> {
    if curve.rows.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let files = ReportFiles { csv: dir.join("sweep.csv"), summary: dir.join("summary.json"), plot: dir.join("plot.json") };

    let mut w = csv::Writer::from_path(&files.csv)?;
    for r in &curve.rows {
        w.serialize(r)?;
    }
    w.flush()?;

    let summary = Summary {
        target: curve.target.clone(),
        best_tau: curve.best_tau,
        best_f1: curve.best_f1,
        rows: curve.rows.len(),
        argmax,
    };
    std::fs::write(&files.summary, serde_json::to_vec_pretty(&summary).map_err(std::io::Error::other)?)?;

    let series = |f: fn(&SweepRow) -> f64| curve.rows.iter().map(f).collect::<Vec<_>>();
    let plot = serde_json::json!({
        "target": curve.target,
        "tau": series(|r| r.tau),
        "precision": series(|r| r.precision),
        "recall": series(|r| r.recall),
        "f1": series(|r| r.f1),
    });
    std::fs::write(&files.plot, serde_json::to_vec(&plot).map_err(std::io::Error::other)?)?;
    Ok(files)
}

pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRow>, EvalError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<SweepRow>, _>>()?)
}
