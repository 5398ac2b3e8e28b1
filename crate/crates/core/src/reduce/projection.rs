use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ReduceError;
use crate::ingest::SnippetRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Umap,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pca" => Ok(Method::Pca),
            "umap" => Ok(Method::Umap),
            other => Err(format!("unknown projection method {other:?}")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Pca => "pca",
            Method::Umap => "umap",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    pub snippet: SnippetRef,
    pub x: f64,
    pub y: f64,
}

/// 2-D coordinates for every input embedding, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub method: Method,
    pub points: Vec<ProjectedPoint>,
    pub fit_meta: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    First,
    Second,
}

impl TryFrom<u8> for Component {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Component::First),
            2 => Ok(Component::Second),
            other => Err(format!("component must be 1 or 2, got {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Gt,
    Lt,
    Ge,
    Le,
}

impl CmpOp {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            CmpOp::Gt => value > threshold,
            CmpOp::Lt => value < threshold,
            CmpOp::Ge => value >= threshold,
            CmpOp::Le => value <= threshold,
        }
    }
}

impl std::str::FromStr for CmpOp {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            ">" | "gt" => Ok(CmpOp::Gt),
            "<" | "lt" => Ok(CmpOp::Lt),
            ">=" | "ge" => Ok(CmpOp::Ge),
            "<=" | "le" => Ok(CmpOp::Le),
            other => Err(format!("unknown comparison {other:?}")),
        }
    }
}

/// Snippets whose chosen coordinate satisfies `op threshold`, in input
/// order. Thresholds such as "PC1 > 40" only make sense for a particular
/// embedding scale, so they are always supplied by the caller.
pub fn filter_by_component(proj: &ProjectionSet, component: Component, op: CmpOp, threshold: f64) -> Vec<SnippetRef> {
    proj.points
        .iter()
        .filter(|p| {
            let v = match component {
                Component::First => p.x,
                Component::Second => p.y,
            };
            op.holds(v, threshold)
        })
        .map(|p| p.snippet.clone())
        .collect()
}

/// Uniform sample without replacement of `round(n * fraction)` items,
/// returned in input order.
pub fn sample_subset<R: Clone>(items: &[R], fraction: f64, seed: u64) -> Vec<R> {
    assert!(fraction > 0.0 && fraction <= 1.0, "fraction must be in (0, 1]");
    let n = items.len();
    let m = ((n as f64 * fraction).round() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, m).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

#[derive(Serialize, Deserialize)]
struct Row {
    clip_id: String,
    index: u32,
    x: f64,
    y: f64,
    method: Method,
}

/// One JSON object per line: `{clip_id, index, x, y, method}`.
pub fn write_projection(path: impl AsRef<Path>, proj: &ProjectionSet) -> Result<(), ReduceError> {
    let path = path.as_ref();
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        for p in &proj.points {
            let row = Row {
                clip_id: p.snippet.clip_id.clone(),
                index: p.snippet.index,
                x: p.x,
                y: p.y,
                method: proj.method,
            };
            serde_json::to_writer(&mut w, &row).map_err(std::io::Error::other)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    std::fs::rename(tmp, path)?;
    Ok(())
}

pub fn read_projection(path: impl AsRef<Path>) -> Result<ProjectionSet, ReduceError> {
    let reader = BufReader::new(File::open(path)?);
    let mut points = Vec::new();
    let mut method = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| ReduceError::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        match method {
            None => method = Some(row.method),
            Some(m) if m != row.method => {
                return Err(ReduceError::Parse {
                    line: i + 1,
                    msg: "mixed projection methods".into(),
                })
            }
            _ => {}
        }
        points.push(ProjectedPoint {
            snippet: SnippetRef::new(row.clip_id, row.index),
            x: row.x,
            y: row.y,
        });
    }
    Ok(ProjectionSet {
        method: method.unwrap_or(Method::Pca),
        points,
        fit_meta: serde_json::Value::Null,
    })
}
