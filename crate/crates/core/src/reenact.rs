//! Scripted run of the whole workflow on a synthetic corpus, with a simulated
//! expert standing in for the interactive review steps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classify::{decide_argmax, split, train, write_predictions, ClassifierModel, SplitSpec, TrainConfig};
use crate::detect::airgun_template;
use crate::eval::{argmax_confusion, default_grid, prf, sweep, write_report, write_truth, Prf, SweepCurve, Truth};
use crate::features::{write_embeddings, FeatureConfig};
use crate::ingest::{encode_wav_pcm16, SnippetRef};
use crate::pipeline::{detect_manifest, embed_manifest, ingest_files, labeled_from_dataset, truth_of, IngestConfig, PipelineError};
use crate::reduce::{pca_projection, umap_fit, write_projection, Method, UmapConfig};
use crate::workspace::Workspace;
use crate::store::{
    export_training_set, write_manifest, ExportConfig, LabelRecord, LabelState, LabelStore, Manifest, Provenance, Upsert,
};
use crate::synth::{corpus, CorpusConfig, SURVEY_INVENTORY};

#[derive(Debug, Clone)]
pub struct ReenactConfig {
    pub corpus: CorpusConfig,
    pub target: String,
    pub threshold: f64,
    pub min_separation_s: f64,
    pub min_count: usize,
    pub split: SplitSpec,
    pub train: TrainConfig,
    pub umap: UmapConfig,
}

impl Default for ReenactConfig {
    fn default() -> Self {
        Self {
            corpus: CorpusConfig::default(),
            target: "airgun".into(),
            threshold: 0.6,
            min_separation_s: 0.5,
            min_count: 100,
            split: SplitSpec::default(),
            train: TrainConfig::default(),
            umap: UmapConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReenactReport {
    pub snippets: usize,
    pub proposals: usize,
    pub accepted_proposals: usize,
    pub rejected_proposals: usize,
    pub missed_events: usize,
    pub inventory: BTreeMap<String, usize>,
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    pub dataset_counts: BTreeMap<String, usize>,
    pub split_sizes: [usize; 3],
    pub classes: Vec<String>,
    pub best_tau: f64,
    pub best_f1: f64,
    /// Sweep optimum when the exported labels are taken as truth instead.
    pub label_best_tau: f64,
    pub label_best_f1: f64,
    pub argmax: Prf,
    pub min_winning_prob: f64,
    pub stage_seconds: BTreeMap<String, f64>,
    pub curve: SweepCurve,
    /// Target probability and truth of every test snippet, by probability.
    pub test_scores: Vec<(f64, bool)>,
}

fn stamp(i: usize) -> String {
    format!("2017-09-01T{:02}:{:02}:{:02}Z", (i / 3600) % 24, (i / 60) % 60, i % 60)
}

/// Runs every stage inside `workdir`, leaving the usual artefacts behind.
pub fn run(cfg: &ReenactConfig, workdir: &Path) -> Result<ReenactReport, PipelineError> {
    let ws = Workspace::new(workdir);
    let mut times = BTreeMap::new();
    let mut lap = Instant::now();
    let mut tick = |name: &str, times: &mut BTreeMap<String, f64>| {
        times.insert(name.to_string(), lap.elapsed().as_secs_f64());
        lap = Instant::now();
    };

    let audio = ws.audio_dir();
    std::fs::create_dir_all(&audio).map_err(crate::store::StoreError::from)?;
    let clips = corpus::<f32>(&cfg.corpus);
    let mut paths: Vec<PathBuf> = Vec::new();
    for c in &clips {
        let p = audio.join(format!("{}.wav", c.clip.id));
        std::fs::write(&p, encode_wav_pcm16(&c.clip.samples, c.clip.sample_rate)).map_err(crate::store::StoreError::from)?;
        paths.push(p);
    }
    let truth: BTreeMap<SnippetRef, Vec<String>> = clips
        .iter()
        .flat_map(|c| {
            c.truth
                .iter()
                .enumerate()
                .filter(|(_, t)| !t.is_empty())
                .map(move |(i, t)| (SnippetRef::new(c.clip.id.clone(), i as u32), t.clone()))
        })
        .collect();
    drop(clips);
    tick("synthesize", &mut times);

    let rows = ingest_files(&paths, &IngestConfig::default())?;
    write_manifest(ws.manifest(), &rows)?;
    let manifest = Manifest::new(rows)?;
    tick("ingest", &mut times);

    let features = FeatureConfig::default();
    let embeddings = embed_manifest::<f32>(&manifest, &features)?;
    write_embeddings(ws.embeddings(), &embeddings)?;
    tick("embed", &mut times);

    let (_, pca) = pca_projection(&embeddings)?;
    write_projection(ws.projection(Method::Pca), &pca)?;
    tick("pca", &mut times);
    let umap = umap_fit(&embeddings, &cfg.umap)?;
    write_projection(ws.projection(Method::Umap), &umap)?;
    tick("umap", &mut times);

    let tpl = airgun_template::<f32>(features.sample_rate, cfg.corpus.airgun_seed);
    let proposals = detect_manifest(&manifest, &tpl, cfg.threshold, cfg.min_separation_s, &cfg.target)?;
    tick("detect", &mut times);

    let mut store = LabelStore::open(ws.labels(), &manifest)?;
    let (mut accepted, mut rejected) = (0, 0);
    let mut step = 0;
    for p in &proposals {
        store.upsert(p.clone())?;
        let real = truth.get(&p.snippet_ref()).is_some_and(|c| c.contains(&cfg.target));
        let state = if real { LabelState::Accepted } else { LabelState::Rejected };
        step += 1;
        let decision = LabelRecord { state, annotator: "expert".into(), timestamp: stamp(step), ..p.clone() };
        if let Upsert::Created(_) = store.upsert(decision)? {
            if real {
                accepted += 1;
            } else {
                rejected += 1;
            }
        }
    }
    // everything but the target is labeled by hand while browsing the projection
    for (snippet, class) in truth.iter().flat_map(|(s, cs)| cs.iter().map(move |c| (s, c))).filter(|(_, c)| **c != cfg.target) {
        for state in [LabelState::Proposed, LabelState::Accepted] {
            step += 1;
            store.upsert(LabelRecord {
                clip_id: snippet.clip_id.clone(),
                snippet_index: snippet.index,
                class: class.clone(),
                state,
                provenance: Provenance::Human,
                annotator: "expert".into(),
                timestamp: stamp(step),
            })?;
        }
    }
    let missed = truth.values().filter(|c| c.contains(&cfg.target)).count() - accepted;
    tick("review", &mut times);
    let mut requested = vec![cfg.target.clone()];
    requested.extend(SURVEY_INVENTORY.iter().map(|t| t.0.to_string()).filter(|c| *c != cfg.target));
    let export = ExportConfig {
        classes: requested,
        min_count: cfg.min_count,
        feature_config_hash: features.config_hash(),
        seed: cfg.split.seed,
        ..ExportConfig::default()
    };
    let dataset = export_training_set(&store, &manifest, &export)?;
    std::fs::write(
        ws.dataset(),
        serde_json::to_vec_pretty(&dataset).map_err(std::io::Error::other).map_err(crate::store::StoreError::from)?,
    )
    .map_err(crate::store::StoreError::from)?;
    let classes = dataset.class_names(&export.background_class);
    let labeled = labeled_from_dataset(&embeddings, &dataset, &classes)?;
    let parts = split(&labeled, &cfg.split)?;
    tick("export", &mut times);

    let model: ClassifierModel<f32> = train(&parts.train, &parts.val, classes.clone(), &cfg.train)?;
    model.save(ws.model())?;
    tick("train", &mut times);

    let preds = parts
        .test
        .iter()
        .map(|s| {
            let e = crate::features::Embedding { snippet: s.snippet.clone(), vector: s.vector.clone(), provider: crate::features::Provider::Reference };
            model.predict(&e)
        })
        .collect::<Result<Vec<_>, _>>()?;
    // scored against what the generator actually placed in each snippet, so
    // shots the detector missed still count as positives
    let label_truth = truth_of(&parts.test, &classes);
    let label_curve = sweep(&preds, &label_truth, &cfg.target, &default_grid())?;
    let test_truth: Truth = label_truth
        .iter()
        .map(|(s, c)| {
            let real = truth.get(s).is_some_and(|t| t.contains(&cfg.target));
            (s.clone(), if real { cfg.target.clone() } else if *c == cfg.target { "none".into() } else { c.clone() })
        })
        .collect();
    let curve = sweep(&preds, &test_truth, &cfg.target, &default_grid())?;
    let argmax = prf(&argmax_confusion(&preds, &test_truth, &cfg.target)?);
    write_predictions(ws.test_predictions(), &preds)?;
    write_truth(ws.test_truth(), &test_truth)?;
    write_report(&curve, Some(argmax), ws.report_dir())?;
    let min_winning_prob = preds
        .iter()
        .map(|p| {
            let w = decide_argmax(p);
            p.prob(w).unwrap_or(0.0)
        })
        .fold(1.0, f64::min);
    tick("evaluate", &mut times);
    let mut test_scores: Vec<(f64, bool)> = preds
        .iter()
        .map(|p| (p.prob(&cfg.target).unwrap_or(0.0), test_truth[&p.snippet] == cfg.target))
        .collect();
    test_scores.sort_by(|a, b| a.0.total_cmp(&b.0));

    Ok(ReenactReport {
        snippets: manifest.len(),
        proposals: proposals.len(),
        accepted_proposals: accepted,
        rejected_proposals: rejected,
        missed_events: missed,
        inventory: store.class_inventory(),
        kept: dataset.kept.clone(),
        dropped: dataset.dropped.clone(),
        dataset_counts: dataset.counts.clone(),
        split_sizes: [parts.train.len(), parts.val.len(), parts.test.len()],
        classes,
        best_tau: curve.best_tau,
        best_f1: curve.best_f1,
        label_best_tau: label_curve.best_tau,
        label_best_f1: label_curve.best_f1,
        argmax,
        min_winning_prob,
        stage_seconds: times,
        curve,
        test_scores,
    })
}
