//! Workspace-level steps. Each reads its inputs from a [`Workspace`] and
//! writes its outputs back into it; the command line tool and the service
//! job runner both call these.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{
    read_predictions, split, train, write_predictions, ClassifierModel, Prediction, SplitSpec, TrainConfig,
};
use crate::eval::{argmax_confusion, prf, EvalError, read_truth, sweep, write_report, write_truth, Prf, ReportFiles, SweepCurve};
use crate::features::{read_embeddings, write_embeddings, Embedding, FeatureConfig, Provider};
use crate::pipeline::{embed_manifest, labeled_from_dataset, truth_of, PipelineError};
use crate::reduce::{pca_projection, sample_subset, umap_fit, write_projection, Method, UmapConfig};
use crate::store::{export_training_set, read_manifest, DatasetManifest, ExportConfig, LabelStore, Manifest, StoreError};
use crate::workspace::Workspace;

fn io(e: std::io::Error) -> PipelineError {
    PipelineError::Store(StoreError::Io(e))
}

/// Reads the workspace manifest.
pub fn load_manifest(ws: &Workspace) -> Result<Manifest, PipelineError> {
    Ok(read_manifest(ws.manifest())?)
}

pub fn load_embeddings(ws: &Workspace) -> Result<Vec<Embedding<f32>>, PipelineError> {
    Ok(read_embeddings(ws.embeddings(), None)?)
}

/// Reference embeddings for every manifest snippet; returns how many were written.
pub fn embed_workspace(ws: &Workspace, cfg: &FeatureConfig) -> Result<usize, PipelineError> {
    let manifest = load_manifest(ws)?;
    let embeddings = embed_manifest::<f32>(&manifest, cfg)?;
    write_embeddings(ws.embeddings(), &embeddings)?;
    Ok(embeddings.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceParams {
    pub pca: bool,
    pub umap: bool,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub n_epochs: usize,
    pub seed: u64,
    /// Fraction of snippets fed to UMAP; PCA always sees all of them.
    pub umap_fraction: f64,
}

impl Default for ReduceParams {
    fn default() -> Self {
        let u = UmapConfig::default();
        Self {
            pca: true,
            umap: true,
            n_neighbors: u.n_neighbors,
            min_dist: u.min_dist,
            n_epochs: u.n_epochs,
            seed: u.seed,
            umap_fraction: 1.0,
        }
    }
}

impl ReduceParams {
    pub fn umap_config(&self) -> UmapConfig {
        UmapConfig {
            n_neighbors: self.n_neighbors,
            min_dist: self.min_dist,
            n_epochs: self.n_epochs,
            seed: self.seed,
            ..UmapConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.pca && !self.umap {
            return Err("nothing to do: both pca and umap are off".into());
        }
        if !(self.umap_fraction > 0.0 && self.umap_fraction <= 1.0) {
            return Err(format!("umap_fraction must be in (0, 1], got {}", self.umap_fraction));
        }
        Ok(())
    }
}

/// Computes the requested projections; returns the files written.
pub fn reduce_workspace(
    ws: &Workspace,
    params: &ReduceParams,
    progress: &mut dyn FnMut(f64),
) -> Result<Vec<PathBuf>, PipelineError> {
    params.validate().map_err(|m| PipelineError::Reduce(crate::reduce::ReduceError::InvalidConfig(m)))?;
    let embeddings = load_embeddings(ws)?;
    progress(0.1);
    let mut written = Vec::new();
    if params.pca {
        let (_, proj) = pca_projection(&embeddings)?;
        write_projection(ws.projection(Method::Pca), &proj)?;
        written.push(ws.projection(Method::Pca));
    }
    progress(0.3);
    if params.umap {
        let subset = if params.umap_fraction < 1.0 {
            sample_subset(&embeddings, params.umap_fraction, params.seed)
        } else {
            embeddings
        };
        let proj = umap_fit(&subset, &params.umap_config())?;
        write_projection(ws.projection(Method::Umap), &proj)?;
        written.push(ws.projection(Method::Umap));
    }
    progress(1.0);
    Ok(written)
}

#[derive(Debug, Clone, Default)]
pub struct TrainParams {
    pub export: ExportConfig,
    pub split: SplitSpec,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub classes: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    pub dropped: Vec<String>,
    pub split_sizes: [usize; 3],
    pub best_epoch: usize,
    pub train_accuracy: f64,
    pub model: PathBuf,
}

pub fn write_dataset(path: impl AsRef<Path>, dataset: &DatasetManifest) -> Result<(), PipelineError> {
    let bytes = serde_json::to_vec_pretty(dataset).map_err(std::io::Error::other).map_err(io)?;
    std::fs::write(path, bytes).map_err(io)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<DatasetManifest, PipelineError> {
    let bytes = std::fs::read(path).map_err(io)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| PipelineError::Store(StoreError::Parse { path: "dataset".into(), line: e.line(), msg: e.to_string() }))
}

/// Exports the accepted labels, trains on the train split and scores the
/// held-out test split. Writes the dataset, the model, and the test-split
/// predictions and labels.
pub fn train_workspace(
    ws: &Workspace,
    store: &LabelStore,
    manifest: &Manifest,
    params: &TrainParams,
    progress: &mut dyn FnMut(f64),
) -> Result<TrainOutcome, PipelineError> {
    let dataset = export_training_set(store, manifest, &params.export)?;
    write_dataset(ws.dataset(), &dataset)?;
    progress(0.1);
    let embeddings = load_embeddings(ws)?;
    let classes = dataset.class_names(&params.export.background_class);
    let labeled = labeled_from_dataset(&embeddings, &dataset, &classes)?;
    drop(embeddings);
    let parts = split(&labeled, &params.split)?;
    progress(0.2);
    let model: ClassifierModel<f32> = train(&parts.train, &parts.val, classes.clone(), &params.train)?;
    model.save(ws.model())?;
    progress(0.9);
    let preds = parts
        .test
        .iter()
        .map(|s| model.predict(&Embedding { snippet: s.snippet.clone(), vector: s.vector.clone(), provider: Provider::Reference }))
        .collect::<Result<Vec<_>, _>>()?;
    write_predictions(ws.test_predictions(), &preds)?;
    write_truth(ws.test_truth(), &truth_of(&parts.test, &classes))?;
    progress(1.0);
    Ok(TrainOutcome {
        classes,
        counts: dataset.counts,
        dropped: dataset.dropped,
        split_sizes: [parts.train.len(), parts.val.len(), parts.test.len()],
        best_epoch: model.train_meta.best_epoch,
        train_accuracy: model.train_meta.train_accuracy,
        model: ws.model(),
    })
}

/// Scores every embedded snippet with the saved model.
pub fn predict_workspace(ws: &Workspace, out: &Path) -> Result<usize, PipelineError> {
    let model = ClassifierModel::<f32>::load(ws.model())?;
    let preds: Vec<Prediction> =
        load_embeddings(ws)?.iter().map(|e| model.predict(e)).collect::<Result<_, _>>()?;
    write_predictions(out, &preds)?;
    Ok(preds.len())
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub curve: SweepCurve,
    pub argmax: Prf,
    pub files: ReportFiles,
}

/// Threshold sweep and argmax scores for `target`, written to the report directory.
pub fn evaluate(
    predictions: &Path,
    truth: &Path,
    target: &str,
    grid: &[f64],
    report_dir: &Path,
) -> Result<EvalOutcome, PipelineError> {
    let preds = read_predictions(predictions)?;
    if preds.is_empty() {
        return Err(EvalError::NoPredictions.into());
    }
    let truth = read_truth(truth)?;
    let curve = sweep(&preds, &truth, target, grid)?;
    let argmax = prf(&argmax_confusion(&preds, &truth, target)?);
    let files = write_report(&curve, Some(argmax), report_dir)?;
    Ok(EvalOutcome { curve, argmax, files })
}

/// [`evaluate`] on the test split written by [`train_workspace`].
pub fn evaluate_workspace(ws: &Workspace, target: &str, grid: &[f64]) -> Result<EvalOutcome, PipelineError> {
    evaluate(&ws.test_predictions(), &ws.test_truth(), target, grid, &ws.report_dir())
}
