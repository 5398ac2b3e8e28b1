//! Glue between stages: manifest-driven ingest, embedding, detection and
//! dataset assembly shared by the command line tool and the service.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::classify::{ClassifyError, Labeled};
use crate::detect::{detect, propose_labels, DetectError, Template};
use crate::eval::{EvalError, Truth};
use crate::features::{embed_reference, mel_spectrogram, Embedding, FeatureConfig, FeatureError};
use crate::ingest::{load_wav, resample, segment, AudioClip, IngestError, SnippetRef};
use crate::reduce::ReduceError;
use crate::scalar::Scalar;
use crate::store::{DatasetManifest, LabelRecord, Manifest, ManifestEntry, StoreError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("snippet {0} has no embedding")]
    MissingEmbedding(SnippetRef),
    #[error("unknown snippet {0}")]
    UnknownSnippet(SnippetRef),
    #[error("source audio for {0} is unavailable: {1}")]
    SourceMissing(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestConfig {
    pub rate: u32,
    pub duration_s: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { rate: 22_050, duration_s: 1.0 }
    }
}

/// Clip id used for a source file: its stem.
pub fn clip_id_for(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Loads and resamples one file.
pub fn load_resampled<T: Scalar>(path: &Path, rate: u32) -> Result<AudioClip<T>, PipelineError> {
    let mut clip = load_wav::<T>(path)?;
    clip.id = clip_id_for(path);
    clip.source_path = path.display().to_string();
    Ok(resample(&clip, rate))
}

/// Manifest rows for an already resampled clip.
pub fn manifest_rows<T: Scalar>(
    clip: &AudioClip<T>,
    source: &str,
    cfg: &IngestConfig,
) -> Result<Vec<ManifestEntry>, PipelineError> {
    Ok(segment(clip, cfg.duration_s, 0.0)?
        .into_iter()
        .map(|s| ManifestEntry {
            clip_id: s.clip_id,
            index: s.index,
            offset_s: s.offset_s,
            sample_count: s.samples.len(),
            source_path: source.to_string(),
            rate: s.rate,
            duration_s: s.duration_s,
        })
        .collect())
}

/// Ingests WAV files in parallel; returns manifest rows in input order.
pub fn ingest_files<P: AsRef<Path> + Sync>(paths: &[P], cfg: &IngestConfig) -> Result<Vec<ManifestEntry>, PipelineError> {
    let per_file: Vec<Result<Vec<ManifestEntry>, PipelineError>> = paths
        .par_iter()
        .map(|p| {
            let p = p.as_ref();
            let clip = load_resampled::<f32>(p, cfg.rate)?;
            manifest_rows(&clip, &p.display().to_string(), cfg)
        })
        .collect();
    let mut out = Vec::new();
    for rows in per_file {
        out.extend(rows?);
    }
    Ok(out)
}

/// Reference embeddings for every snippet of an in-memory, resampled clip.
pub fn embed_clip<T: Scalar>(clip: &AudioClip<T>, duration_s: f64, cfg: &FeatureConfig) -> Result<Vec<Embedding<T>>, PipelineError> {
    segment(clip, duration_s, 0.0)?
        .par_iter()
        .map(|s| Ok(embed_reference(&mel_spectrogram(s, cfg)?, s.snippet_ref())?))
        .collect()
}

fn clip_groups(manifest: &Manifest) -> Vec<(&str, &str, f64)> {
    let mut seen = BTreeMap::new();
    for e in manifest.entries() {
        seen.entry(e.clip_id.as_str()).or_insert((e.source_path.as_str(), e.duration_s));
    }
    seen.into_iter().map(|(c, (p, d))| (c, p, d)).collect()
}

fn load_source<T: Scalar>(clip_id: &str, source: &str, rate: u32) -> Result<AudioClip<T>, PipelineError> {
    let path = Path::new(source);
    if source.is_empty() || !path.exists() {
        return Err(PipelineError::SourceMissing(clip_id.to_string(), source.to_string()));
    }
    let mut clip = load_resampled(path, rate)?;
    clip.id = clip_id.to_string();
    Ok(clip)
}

/// Embeds every manifest snippet by re-reading its source file.
pub fn embed_manifest<T: Scalar>(manifest: &Manifest, cfg: &FeatureConfig) -> Result<Vec<Embedding<T>>, PipelineError> {
    let per_clip: Vec<Result<Vec<Embedding<T>>, PipelineError>> = clip_groups(manifest)
        .into_par_iter()
        .map(|(id, source, duration)| {
            let clip = load_source::<T>(id, source, cfg.sample_rate)?;
            let all = embed_clip(&clip, duration, cfg)?;
            Ok(all.into_iter().filter(|e| manifest.contains(&e.snippet)).collect())
        })
        .collect();
    let mut out = Vec::with_capacity(manifest.len());
    for e in per_clip {
        out.extend(e?);
    }
    Ok(out)
}

/// Samples of one snippet, re-read from its source file at the manifest rate.
pub fn snippet_samples<T: Scalar>(manifest: &Manifest, snippet: &SnippetRef) -> Result<(Vec<T>, u32), PipelineError> {
    let entry = manifest.get(snippet).ok_or_else(|| PipelineError::UnknownSnippet(snippet.clone()))?;
    let rate = if entry.rate == 0 { 22_050 } else { entry.rate };
    let clip = load_source::<T>(&entry.clip_id, &entry.source_path, rate)?;
    let start = (entry.offset_s * f64::from(rate)).round() as usize;
    let end = (start + entry.sample_count).min(clip.samples.len());
    Ok((clip.samples[start.min(end)..end].to_vec(), rate))
}

/// Matched-filter proposals over every clip in the manifest.
pub fn detect_manifest<T: Scalar>(
    manifest: &Manifest,
    tpl: &Template<T>,
    threshold: f64,
    min_separation_s: f64,
    class: &str,
) -> Result<Vec<LabelRecord>, PipelineError> {
    let events: Vec<Result<Vec<_>, PipelineError>> = clip_groups(manifest)
        .into_par_iter()
        .map(|(id, source, _)| {
            let clip = load_source::<T>(id, source, tpl.rate)?;
            Ok(detect(&clip, tpl, threshold, min_separation_s)?)
        })
        .collect();
    let mut all = Vec::new();
    for e in events {
        all.extend(e?);
    }
    Ok(propose_labels(&all, class, manifest)?)
}

/// Pairs dataset rows with their embeddings. Classes are indexed by `classes`;
/// rows of other classes are skipped.
pub fn labeled_from_dataset<T: Scalar>(
    embeddings: &[Embedding<T>],
    dataset: &DatasetManifest,
    classes: &[String],
) -> Result<Vec<Labeled<T>>, PipelineError> {
    let by_ref: BTreeMap<&SnippetRef, &Embedding<T>> = embeddings.iter().map(|e| (&e.snippet, e)).collect();
    let mut out = Vec::with_capacity(dataset.snippets.len());
    for d in &dataset.snippets {
        let Some(class) = classes.iter().position(|c| *c == d.class) else {
            continue;
        };
        let key = SnippetRef::new(d.clip_id.clone(), d.index);
        let e = by_ref.get(&key).ok_or_else(|| PipelineError::MissingEmbedding(key.clone()))?;
        out.push(Labeled { snippet: key, vector: e.vector.clone(), class });
    }
    Ok(out)
}

/// Ground truth for a labeled subset.
pub fn truth_of<T>(rows: &[Labeled<T>], classes: &[String]) -> Truth {
    rows.iter().map(|r| (r.snippet.clone(), classes[r.class].clone())).collect()
}
