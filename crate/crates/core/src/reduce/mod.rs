//! Two-dimensional projections (PCA, UMAP) and the triage operations built
//! on them.

mod pca;
mod projection;
pub mod umap;

use thiserror::Error;

pub use pca::{pca_fit, pca_project, pca_projection, PcaModel};
pub use projection::{
    filter_by_component, read_projection, sample_subset, write_projection, CmpOp, Component, Method,
    ProjectedPoint, ProjectionSet,
};
pub use umap::{umap_fit, UmapConfig};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid number of components {k} for {n} points in {dim} dimensions")]
    InvalidComponents { k: usize, n: usize, dim: usize },
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input value in row {0}")]
    NonFinite(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed projection file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_rows<T: crate::Scalar, R: AsRef<[T]>>(rows: &[R]) -> Result<usize, ReduceError> {
    let dim = rows.first().map_or(0, |r| r.as_ref().len());
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != dim {
            return Err(ReduceError::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(ReduceError::NonFinite(i));
        }
    }
    Ok(dim)
}
