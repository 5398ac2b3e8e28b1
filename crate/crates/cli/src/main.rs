use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use triage_core::classify::{SplitSpec, TrainConfig};
use triage_core::detect::{airgun_template, Template};
use triage_core::eval::{default_grid, parse_grid};
use triage_core::features::{import_embeddings, write_embeddings, FeatureConfig};
use triage_core::ingest::{load_wav, SnippetRef};
use triage_core::pipeline::{detect_manifest, ingest_files, IngestConfig};
use triage_core::reduce::{filter_by_component, read_projection, CmpOp, Component, Method};
use triage_core::reenact::{self, ReenactConfig};
use triage_core::store::{
    export_training_set, now_timestamp, write_manifest, ExportConfig, LabelRecord, LabelState, LabelStore, Provenance,
    StoreError, Upsert,
};
use triage_core::workflow::{self, ReduceParams, TrainParams};
use triage_core::Workspace;
use triage_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "triage", version, about = "Acoustic triage workbench")]
struct Cli {
    /// Working directory holding the manifest, labels and artefacts.
    #[arg(long, global = true, default_value = "./workspace")]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut WAV files (or directories of them) into snippets and write the manifest.
    Ingest {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 22_050)]
        rate: u32,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
    },
    /// Compute reference embeddings, or import an embedding file.
    Embed {
        #[arg(long)]
        import: Option<PathBuf>,
    },
    /// Project embeddings to 2-D.
    Reduce(ReduceArgs),
    /// List (and optionally propose labels for) snippets past a coordinate threshold.
    Filter {
        #[arg(long, value_enum, default_value_t = MethodArg::Pca)]
        method: MethodArg,
        #[arg(long, default_value_t = 1)]
        component: u8,
        /// One of gt, lt, ge, le.
        #[arg(long, default_value = "gt")]
        op: String,
        #[arg(long, allow_hyphen_values = true)]
        threshold: f64,
        /// Record a proposed label of this class for every hit.
        #[arg(long)]
        propose: Option<String>,
    },
    /// Matched-filter detection; hits become proposed labels.
    Detect {
        /// Template WAV; defaults to the built-in synthetic airgun pulse.
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, default_value_t = 11)]
        template_seed: u64,
        #[arg(long, default_value_t = 0.6)]
        threshold: f64,
        #[arg(long, default_value_t = 0.5)]
        min_separation: f64,
        #[arg(long, default_value = "airgun")]
        class: String,
    },
    /// Review label decisions.
    Labels {
        #[command(subcommand)]
        action: LabelAction,
    },
    /// Write the training set (dataset.json) from accepted labels.
    Export(ExportArgs),
    /// Export, split, train and score the held-out split.
    Train {
        #[command(flatten)]
        export: ExportArgs,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, default_value_t = 1e-4)]
        l2: f64,
    },
    /// Score every embedded snippet with the trained model.
    Predict {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Threshold sweep and argmax scores for one class.
    Eval {
        #[arg(long)]
        target: String,
        /// start:end:step
        #[arg(long)]
        grid: Option<String>,
        /// Defaults to the held-out split written by `train`.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Serve the HTTP API (and the UI bundle, if given).
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value_t = triage_service::DEFAULT_PROJECTION_CAP)]
        projection_cap: usize,
    },
    /// Run the whole workflow on a synthetic corpus with a scripted reviewer.
    Demo {
        #[arg(long, default_value_t = 2017)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Pca,
    Umap,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pca => Method::Pca,
            MethodArg::Umap => Method::Umap,
        }
    }
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, default_value_t = 10)]
    n_neighbors: usize,
    #[arg(long, default_value_t = 0.1)]
    min_dist: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fraction of snippets given to UMAP.
    #[arg(long, default_value_t = 1.0)]
    umap_fraction: f64,
}

#[derive(Args)]
struct ExportArgs {
    /// Classes to keep, in priority order.
    #[arg(long, value_delimiter = ',', required = true)]
    classes: Vec<String>,
    #[arg(long, default_value_t = 100)]
    min_count: usize,
    #[arg(long, default_value_t = 10.0)]
    background_ratio: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

impl ExportArgs {
    fn config(&self) -> ExportConfig {
        ExportConfig {
            classes: self.classes.clone(),
            min_count: self.min_count,
            background_ratio: self.background_ratio,
            seed: self.seed,
            feature_config_hash: FeatureConfig::default().config_hash(),
            ..ExportConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum LabelAction {
    Propose(LabelArgs),
    Accept(LabelArgs),
    Reject(LabelArgs),
    /// Current labels, optionally only one state.
    List {
        #[arg(long)]
        state: Option<LabelState>,
    },
    /// Accepted label count per class.
    Inventory,
}

#[derive(Args)]
struct LabelArgs {
    clip_id: String,
    index: u32,
    class: String,
    #[arg(long, default_value = "cli")]
    annotator: String,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let ws = Workspace::new(&cli.data_dir);
    match cli.command {
        Command::Ingest { inputs, rate, duration } => ingest(&ws, &inputs, rate, duration),
        Command::Embed { import } => embed(&ws, import.as_deref()),
        Command::Reduce(args) => reduce(&ws, &args),
        Command::Filter { method, component, op, threshold, propose } => {
            filter(&ws, method.into(), component, &op, threshold, propose.as_deref())
        }
        Command::Detect { template, template_seed, threshold, min_separation, class } => {
            run_detect(&ws, template.as_deref(), template_seed, threshold, min_separation, &class)
        }
        Command::Labels { action } => labels(&ws, action),
        Command::Export(args) => {
            let manifest = workflow::load_manifest(&ws)?;
            let store = LabelStore::open(ws.labels(), &manifest)?;
            let dataset = export_training_set(&store, &manifest, &args.config())?;
            workflow::write_dataset(ws.dataset(), &dataset)?;
            println!("{}", serde_json::to_string_pretty(&serde_json::json!({
                "counts": dataset.counts, "kept": dataset.kept, "dropped": dataset.dropped,
            }))?);
            Ok(())
        }
        Command::Train { export, epochs, batch, lr, l2 } => {
            let manifest = workflow::load_manifest(&ws)?;
            let store = LabelStore::open(ws.labels(), &manifest)?;
            let train = TrainConfig { epochs, batch, lr, l2, seed: export.seed };
            let params = TrainParams {
                export: export.config(),
                split: SplitSpec { seed: export.seed, ..SplitSpec::default() },
                train,
            };
            let out = workflow::train_workspace(&ws, &store, &manifest, &params, &mut |_| {})?;
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
        Command::Predict { output } => {
            let out = output.unwrap_or_else(|| ws.predictions());
            let n = workflow::predict_workspace(&ws, &out)?;
            println!("wrote {n} predictions to {}", out.display());
            Ok(())
        }
        Command::Eval { target, grid, predictions, truth } => {
            let grid = match grid {
                Some(g) => parse_grid(&g)?,
                None => default_grid(),
            };
            let preds = predictions.unwrap_or_else(|| ws.test_predictions());
            let truth = truth.unwrap_or_else(|| ws.test_truth());
            let out = workflow::evaluate(&preds, &truth, &target, &grid, &ws.report_dir())?;
            println!(
                "{target}: best F1 {:.4} at tau {}; argmax P {:.4} R {:.4} F1 {:.4}",
                out.curve.best_f1, out.curve.best_tau, out.argmax.precision, out.argmax.recall, out.argmax.f1
            );
            println!("report: {}", out.files.summary.parent().unwrap_or(Path::new(".")).display());
            Ok(())
        }
        Command::Serve { port, host, static_dir, projection_cap } => {
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad host or port")?;
            let cfg = ServiceConfig { data_dir: cli.data_dir.clone(), static_dir, projection_cap };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(triage_service::serve(cfg, addr))?;
            Ok(())
        }
        Command::Demo { seed } => {
            let mut cfg = ReenactConfig::default();
            cfg.corpus.seed = seed;
            std::fs::create_dir_all(ws.root())?;
            let report = reenact::run(&cfg, ws.root())?;
            println!("{}", serde_json::to_string_pretty(&serde_json::json!({
                "snippets": report.snippets,
                "proposals": report.proposals,
                "accepted_proposals": report.accepted_proposals,
                "missed_events": report.missed_events,
                "kept": report.kept,
                "dropped": report.dropped,
                "dataset_counts": report.dataset_counts,
                "split_sizes": report.split_sizes,
                "best_tau": report.best_tau,
                "best_f1": report.best_f1,
                "argmax": report.argmax,
                "stage_seconds": report.stage_seconds,
            }))?);
            Ok(())
        }
    }
}

fn wav_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        bail!("no WAV files found");
    }
    Ok(out)
}

fn ingest(ws: &Workspace, inputs: &[PathBuf], rate: u32, duration: f64) -> Result<()> {
    let files = wav_files(inputs)?;
    let rows = ingest_files(&files, &IngestConfig { rate, duration_s: duration })?;
    std::fs::create_dir_all(ws.root())?;
    write_manifest(ws.manifest(), &rows)?;
    println!("{} snippets from {} files -> {}", rows.len(), files.len(), ws.manifest().display());
    Ok(())
}

fn embed(ws: &Workspace, import: Option<&Path>) -> Result<()> {
    let n = match import {
        None => workflow::embed_workspace(ws, &FeatureConfig::default())?,
        Some(path) => {
            let manifest = workflow::load_manifest(ws)?;
            let embeddings = import_embeddings::<f32>(path)?;
            if let Some(e) = embeddings.iter().find(|e| !manifest.contains(&e.snippet)) {
                bail!("imported embedding for {} is not in the manifest", e.snippet);
            }
            write_embeddings(ws.embeddings(), &embeddings)?;
            embeddings.len()
        }
    };
    println!("{n} embeddings -> {}", ws.embeddings().display());
    Ok(())
}

fn reduce(ws: &Workspace, a: &ReduceArgs) -> Result<()> {
    let params = ReduceParams {
        pca: !matches!(a.method, Some(MethodArg::Umap)),
        umap: !matches!(a.method, Some(MethodArg::Pca)),
        n_neighbors: a.n_neighbors,
        min_dist: a.min_dist,
        n_epochs: a.epochs,
        seed: a.seed,
        umap_fraction: a.umap_fraction,
    };
    for f in workflow::reduce_workspace(ws, &params, &mut |_| {})? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn record(snippet: &SnippetRef, class: &str, state: LabelState, provenance: Provenance, annotator: &str) -> LabelRecord {
    LabelRecord {
        clip_id: snippet.clip_id.clone(),
        snippet_index: snippet.index,
        class: class.to_string(),
        state,
        provenance,
        annotator: annotator.to_string(),
        timestamp: now_timestamp(),
    }
}

/// Upserts proposals, skipping ones the store refuses as transitions
/// (e.g. a snippet already accepted). Returns (created, unchanged, skipped).
fn propose_all(store: &mut LabelStore, records: Vec<LabelRecord>) -> Result<(usize, usize, usize)> {
    let mut tally = (0, 0, 0);
    for r in records {
        match store.upsert(r) {
            Ok(Upsert::Created(_)) => tally.0 += 1,
            Ok(Upsert::Unchanged(_)) => tally.1 += 1,
            Err(StoreError::IllegalTransition { .. }) => tally.2 += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(tally)
}

fn filter(ws: &Workspace, method: Method, component: u8, op: &str, threshold: f64, propose: Option<&str>) -> Result<()> {
    let component = Component::try_from(component).map_err(anyhow::Error::msg)?;
    let op: CmpOp = op.parse().map_err(anyhow::Error::msg)?;
    let proj = read_projection(ws.projection(method)).with_context(|| format!("no {method} projection"))?;
    let hits = filter_by_component(&proj, component, op, threshold);
    for h in &hits {
        println!("{}\t{}", h.clip_id, h.index);
    }
    eprintln!("{} of {} snippets", hits.len(), proj.points.len());
    if let Some(class) = propose {
        let manifest = workflow::load_manifest(ws)?;
        let mut store = LabelStore::open(ws.labels(), &manifest)?;
        let recs = hits.iter().map(|h| record(h, class, LabelState::Proposed, Provenance::Human, "filter")).collect();
        let (c, u, s) = propose_all(&mut store, recs)?;
        eprintln!("proposed {class}: {c} new, {u} unchanged, {s} skipped");
    }
    Ok(())
}

fn run_detect(ws: &Workspace, template: Option<&Path>, seed: u64, threshold: f64, min_sep: f64, class: &str) -> Result<()> {
    let tpl: Template<f32> = match template {
        Some(p) => Template::from_clip(&load_wav::<f32>(p)?)?,
        None => airgun_template(22_050, seed),
    };
    let manifest = workflow::load_manifest(ws)?;
    let proposals = detect_manifest(&manifest, &tpl, threshold, min_sep, class)?;
    let mut store = LabelStore::open(ws.labels(), &manifest)?;
    let (c, u, s) = propose_all(&mut store, proposals)?;
    println!("{class}: {c} new proposals, {u} unchanged, {s} skipped");
    Ok(())
}

fn labels(ws: &Workspace, action: LabelAction) -> Result<()> {
    let manifest = workflow::load_manifest(ws)?;
    let mut store = LabelStore::open(ws.labels(), &manifest)?;
    let (args, state) = match action {
        LabelAction::List { state } => {
            for r in store.current().filter(|r| state.is_none_or(|s| r.state == s)) {
                println!("{}", serde_json::to_string(r)?);
            }
            return Ok(());
        }
        LabelAction::Inventory => {
            for (class, n) in store.class_inventory() {
                println!("{class}\t{n}");
            }
            return Ok(());
        }
        LabelAction::Propose(a) => (a, LabelState::Proposed),
        LabelAction::Accept(a) => (a, LabelState::Accepted),
        LabelAction::Reject(a) => (a, LabelState::Rejected),
    };
    let snippet = SnippetRef::new(args.clip_id.clone(), args.index);
    match store.upsert(record(&snippet, &args.class, state, Provenance::Human, &args.annotator))? {
        Upsert::Created(r) => println!("{}", serde_json::to_string(&r)?),
        Upsert::Unchanged(r) => println!("unchanged: {}", serde_json::to_string(&r)?),
    }
    Ok(())
}
