//! UMAP, split into independently testable stages:
//!
//! 1. exact k-nearest-neighbour graph ([`knn_graph`]),
//! 2. per-point smooth-kNN bandwidth calibration ([`smooth_knn`]),
//! 3. fuzzy union of the directed memberships ([`symmetrize`]),
//! 4. low-dimensional curve fit ([`fit_curve`]),
//! 5. SGD layout with negative sampling ([`optimize_layout`]).

mod calibrate;
mod curve;
mod graph;
mod knn;
mod layout;

use serde::{Deserialize, Serialize};

use super::{check_rows, Method, ProjectedPoint, ProjectionSet, ReduceError};
use crate::features::Embedding;
use crate::scalar::Scalar;

pub use calibrate::{smooth_knn, Calibration, PointCalibration, BISECTION_STEPS};
pub use curve::{curve_target, fit_curve, CurveParams, SPREAD};
pub use graph::{symmetrize, t_conorm, FuzzyGraph};
pub use knn::{knn_graph, KnnGraph};
pub use layout::{optimize_layout, Layout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmapConfig {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for UmapConfig {
    fn default() -> Self {
        Self {
            n_neighbors: 10,
            min_dist: 0.1,
            n_epochs: 200,
            negative_sample_rate: 5,
            learning_rate: 1.0,
            seed: 7,
        }
    }
}

impl UmapConfig {
    fn validate(&self, n: usize) -> Result<(), ReduceError> {
        if n <= self.n_neighbors {
            return Err(ReduceError::TooFewPoints {
                needed: self.n_neighbors + 1,
                got: n,
            });
        }
        if self.n_neighbors < 2 {
            return Err(ReduceError::InvalidConfig("n_neighbors must be at least 2".into()));
        }
        if !(self.min_dist > 0.0) || !(self.learning_rate > 0.0) || self.n_epochs == 0 {
            return Err(ReduceError::InvalidConfig(
                "min_dist, learning_rate and n_epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Everything produced by one UMAP run.
#[derive(Debug, Clone)]
pub struct UmapOutput<T> {
    pub coords: Vec<[T; 2]>,
    pub calibration: Calibration<T>,
    pub graph: FuzzyGraph<T>,
    pub curve: CurveParams,
}

/// Runs all five stages on raw vectors.
pub fn umap_embed<T: Scalar, R: AsRef<[T]> + Sync>(rows: &[R], cfg: &UmapConfig) -> Result<UmapOutput<T>, ReduceError> {
    cfg.validate(rows.len())?;
    check_rows(rows)?;
    let knn = knn_graph(rows, cfg.n_neighbors);
    let calibration = smooth_knn(&knn);
    let graph = symmetrize(&knn, &calibration);
    let curve = fit_curve(cfg.min_dist);
    let Layout { coords } = optimize_layout(&graph, rows.len(), &curve, cfg);
    Ok(UmapOutput {
        coords,
        calibration,
        graph,
        curve,
    })
}

pub fn umap_fit<T: Scalar>(embeddings: &[Embedding<T>], cfg: &UmapConfig) -> Result<ProjectionSet, ReduceError> {
    let out = umap_embed(embeddings, cfg)?;
    let points = embeddings
        .iter()
        .zip(&out.coords)
        .map(|(e, c)| ProjectedPoint {
            snippet: e.snippet.clone(),
            x: c[0].as_f64(),
            y: c[1].as_f64(),
        })
        .collect();
    let fit_meta = serde_json::json!({
        "config": cfg,
        "a": out.curve.a,
        "b": out.curve.b,
        "calibration_flagged": out.calibration.flagged_count(),
        "edges": out.graph.edges.len(),
    });
    Ok(ProjectionSet {
        method: Method::Umap,
        points,
        fit_meta,
    })
}
