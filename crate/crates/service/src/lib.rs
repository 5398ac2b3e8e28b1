//! HTTP facade over a triage workspace: projections, snippet audio, label
//! decisions and background jobs.

mod decimate;
pub mod jobs;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::SystemTime;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use triage_core::classify::{SplitSpec, TrainConfig};
use triage_core::eval::{default_grid, parse_grid};
use triage_core::features::FeatureConfig;
use triage_core::ingest::{encode_wav_pcm16, SnippetRef};
use triage_core::pipeline::{load_resampled, PipelineError};
use triage_core::reduce::{filter_by_component, read_projection, CmpOp, Component, Method, ProjectionSet};
use triage_core::store::{
    now_timestamp, read_manifest, ExportConfig, LabelRecord, LabelState, LabelStore, Manifest, Provenance, StoreError,
    Upsert,
};
use triage_core::workflow::{self, ReduceParams, TrainParams};
use triage_core::Workspace;

pub use decimate::farthest_point_indices;
pub use jobs::{JobKind, JobState, JobStatus, JobTable};

pub const DEFAULT_PROJECTION_CAP: usize = 200_000;
const AUDIO_CACHE_CLIPS: usize = 8;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Directory served at `/`, typically the built UI bundle.
    pub static_dir: Option<PathBuf>,
    /// Projection payloads larger than this are decimated.
    pub projection_cap: usize,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self { data_dir: data_dir.into(), static_dir: None, projection_cap: DEFAULT_PROJECTION_CAP }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct CachedProjection {
    modified: SystemTime,
    set: Arc<ProjectionSet>,
    /// Indices into `set.points` that make up the capped payload.
    shown: Arc<Vec<usize>>,
}

struct AppState {
    ws: Workspace,
    cap: usize,
    manifest: Arc<Manifest>,
    /// Single writer; handlers hold it only for one upsert or one copy.
    store: Mutex<LabelStore>,
    jobs: JobTable,
    projections: RwLock<HashMap<Method, CachedProjection>>,
    audio: Mutex<HashMap<String, Arc<Vec<f32>>>>,
}

type Shared = Arc<AppState>;

/// Error body `{"error": message}` with a status code.
#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn new(status: StatusCode, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

fn bad_request(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, e.to_string())
}

/// Builds the router. Opens (or creates) the label log of `data_dir`; a
/// workspace without a manifest starts with no snippets.
pub fn router(cfg: ServiceConfig) -> Result<Router, ServiceError> {
    let ws = Workspace::new(&cfg.data_dir);
    std::fs::create_dir_all(ws.root())?;
    let manifest = if ws.manifest().exists() { read_manifest(ws.manifest())? } else { Manifest::new(Vec::new())? };
    let store = LabelStore::open(ws.labels(), &manifest)?;
    let state = Arc::new(AppState {
        ws,
        cap: cfg.projection_cap,
        manifest: Arc::new(manifest),
        store: Mutex::new(store),
        jobs: JobTable::default(),
        projections: RwLock::new(HashMap::new()),
        audio: Mutex::new(HashMap::new()),
    });
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/projection", get(projection))
        .route("/api/projection/filter", get(projection_filter))
        .route("/api/snippets/{clip_id}/{index}/audio", get(audio))
        .route("/api/labels", get(list_labels).post(post_label))
        .route("/api/jobs", get(list_jobs).post(submit_job))
        .route("/api/jobs/{id}", get(job_status))
        .with_state(state);
    Ok(match cfg.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    })
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(cfg: ServiceConfig, addr: SocketAddr) -> Result<(), ServiceError> {
    let app = router(cfg)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app).await?;
    Ok(())
}

async fn health(State(st): State<Shared>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "ok": true, "snippets": st.manifest.len() }))
}

#[derive(Deserialize)]
struct MethodQuery {
    method: Option<String>,
}

fn parse_method(m: Option<&str>) -> Result<Method, ApiError> {
    m.ok_or_else(|| bad_request("missing method=pca|umap"))?.parse().map_err(bad_request)
}

/// Loads (or reuses) a projection file, re-reading it when it changes on disk.
async fn cached_projection(st: &Shared, method: Method) -> Result<(Arc<ProjectionSet>, Arc<Vec<usize>>), ApiError> {
    let path = st.ws.projection(method);
    let modified = match std::fs::metadata(&path).and_then(|m| m.modified()) {
        Ok(t) => t,
        Err(_) => return Err(ApiError::new(StatusCode::NOT_FOUND, format!("no {method} projection has been computed"))),
    };
    if let Some(c) = st.projections.read().expect("projection cache poisoned").get(&method) {
        if c.modified == modified {
            return Ok((c.set.clone(), c.shown.clone()));
        }
    }
    let cap = st.cap;
    let (set, shown) = tokio::task::spawn_blocking(move || {
        let set = read_projection(&path)?;
        let pts: Vec<[f64; 2]> = set.points.iter().map(|p| [p.x, p.y]).collect();
        let shown = farthest_point_indices(&pts, cap);
        Ok::<_, triage_core::reduce::ReduceError>((Arc::new(set), Arc::new(shown)))
    })
    .await
    .map_err(internal)?
    .map_err(internal)?;
    st.projections
        .write()
        .expect("projection cache poisoned")
        .insert(method, CachedProjection { modified, set: set.clone(), shown: shown.clone() });
    Ok((set, shown))
}

#[derive(Serialize)]
struct ProjectionRow<'a> {
    clip_id: &'a str,
    index: u32,
    x: f64,
    y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

async fn projection(State(st): State<Shared>, Query(q): Query<MethodQuery>) -> Result<Response, ApiError> {
    let method = parse_method(q.method.as_deref())?;
    let (set, shown) = cached_projection(&st, method).await?;
    let mut labels = st.store.lock().expect("label store poisoned").accepted_by_snippet();
    let rows: Vec<ProjectionRow> = shown
        .iter()
        .map(|&i| {
            let p = &set.points[i];
            ProjectionRow { clip_id: &p.snippet.clip_id, index: p.snippet.index, x: p.x, y: p.y, label: labels.remove(&p.snippet) }
        })
        .collect();
    Ok(Json(rows).into_response())
}

#[derive(Deserialize)]
struct FilterQuery {
    method: Option<String>,
    component: Option<u8>,
    op: Option<String>,
    threshold: Option<f64>,
}

async fn projection_filter(State(st): State<Shared>, Query(q): Query<FilterQuery>) -> Result<Response, ApiError> {
    let method = parse_method(q.method.as_deref())?;
    let component = Component::try_from(q.component.unwrap_or(1)).map_err(bad_request)?;
    let op: CmpOp = q.op.as_deref().unwrap_or("gt").parse().map_err(bad_request)?;
    let threshold = q.threshold.ok_or_else(|| bad_request("missing threshold"))?;
    let (set, _) = cached_projection(&st, method).await?;
    let hits = filter_by_component(&set, component, op, threshold);
    Ok(Json(serde_json::json!({ "count": hits.len(), "snippets": hits })).into_response())
}

async fn audio(State(st): State<Shared>, UrlPath((clip_id, index)): UrlPath<(String, u32)>) -> Result<Response, ApiError> {
    let snippet = SnippetRef::new(clip_id, index);
    let entry = st
        .manifest
        .get(&snippet)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown snippet {snippet}")))?;
    let rate = if entry.rate == 0 { 22_050 } else { entry.rate };
    let cached = st.audio.lock().expect("audio cache poisoned").get(&entry.clip_id).cloned();
    let samples = match cached {
        Some(s) => s,
        None => {
            let source = PathBuf::from(&entry.source_path);
            if entry.source_path.is_empty() || !source.exists() {
                return Err(ApiError::new(StatusCode::GONE, format!("source audio {} is missing", entry.source_path)));
            }
            let clip = tokio::task::spawn_blocking(move || load_resampled::<f32>(&source, rate))
                .await
                .map_err(internal)?
                .map_err(|e| match e {
                    PipelineError::Ingest(triage_core::ingest::IngestError::Io(_)) => {
                        ApiError::new(StatusCode::GONE, e.to_string())
                    }
                    other => internal(other),
                })?;
            let samples = Arc::new(clip.samples);
            let mut cache = st.audio.lock().expect("audio cache poisoned");
            if cache.len() >= AUDIO_CACHE_CLIPS {
                cache.clear();
            }
            cache.insert(entry.clip_id.clone(), samples.clone());
            samples
        }
    };
    let start = ((entry.offset_s * f64::from(rate)).round() as usize).min(samples.len());
    let end = (start + entry.sample_count).min(samples.len());
    let bytes = encode_wav_pcm16(&samples[start..end], rate);
    Ok(([(header::CONTENT_TYPE, "audio/wav")], bytes).into_response())
}

#[derive(Deserialize)]
struct LabelBody {
    clip_id: String,
    index: u32,
    class: String,
    state: LabelState,
    #[serde(default)]
    annotator: Option<String>,
}

async fn list_labels(State(st): State<Shared>) -> Json<Vec<LabelRecord>> {
    Json(st.store.lock().expect("label store poisoned").current().cloned().collect())
}

async fn post_label(State(st): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let body: LabelBody = serde_json::from_slice(&body).map_err(bad_request)?;
    let rec = LabelRecord {
        clip_id: body.clip_id,
        snippet_index: body.index,
        class: body.class,
        state: body.state,
        provenance: Provenance::Human,
        annotator: body.annotator.unwrap_or_else(|| "ui".into()),
        timestamp: now_timestamp(),
    };
    let st2 = st.clone();
    let outcome = tokio::task::spawn_blocking(move || st2.store.lock().expect("label store poisoned").upsert(rec))
        .await
        .map_err(internal)?;
    match outcome {
        Ok(Upsert::Created(r)) => Ok((StatusCode::CREATED, Json(r)).into_response()),
        Ok(Upsert::Unchanged(r)) => Ok((StatusCode::OK, Json(r)).into_response()),
        Err(e @ StoreError::UnknownSnippet(_)) => Err(ApiError::new(StatusCode::NOT_FOUND, e.to_string())),
        Err(e @ StoreError::IllegalTransition { .. }) => Err(ApiError::new(StatusCode::CONFLICT, e.to_string())),
        Err(e @ StoreError::InvalidClass(_)) => Err(bad_request(e)),
        Err(e) => Err(internal(e)),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JobRequest {
    kind: String,
    #[serde(default)]
    params: serde_json::Value,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct EmbedParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainJobParams {
    classes: Vec<String>,
    min_count: Option<usize>,
    background_ratio: Option<f64>,
    seed: Option<u64>,
    epochs: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    l2: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalParams {
    target: String,
    /// `start:end:step`; the default grid is 0.01..1.00 in steps of 0.01.
    grid: Option<String>,
}

enum Task {
    Embed,
    Reduce(ReduceParams),
    Train(TrainParams),
    Eval { target: String, grid: Vec<f64> },
}

fn params<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T, ApiError> {
    let v = if v.is_null() { serde_json::json!({}) } else { v };
    serde_json::from_value(v).map_err(|e| bad_request(format!("bad params: {e}")))
}

fn parse_task(req: JobRequest) -> Result<(JobKind, Task), ApiError> {
    let kind: JobKind = req.kind.parse().map_err(bad_request)?;
    let task = match kind {
        JobKind::Embed => {
            let _: EmbedParams = params(req.params)?;
            Task::Embed
        }
        JobKind::Reduce => {
            let p: ReduceParams = params(req.params)?;
            p.validate().map_err(bad_request)?;
            Task::Reduce(p)
        }
        JobKind::Train => {
            let p: TrainJobParams = params(req.params)?;
            if p.classes.is_empty() {
                return Err(bad_request("classes must not be empty"));
            }
            let defaults = TrainConfig::default();
            let export = ExportConfig::default();
            let train = TrainConfig {
                epochs: p.epochs.unwrap_or(defaults.epochs),
                batch: p.batch.unwrap_or(defaults.batch),
                lr: p.lr.unwrap_or(defaults.lr),
                l2: p.l2.unwrap_or(defaults.l2),
                seed: p.seed.unwrap_or(defaults.seed),
            };
            if train.epochs == 0 || train.batch == 0 || !(train.lr > 0.0) || !(train.l2 >= 0.0) {
                return Err(bad_request("epochs and batch must be positive, lr > 0, l2 >= 0"));
            }
            let export = ExportConfig {
                classes: p.classes,
                min_count: p.min_count.unwrap_or(export.min_count),
                background_ratio: p.background_ratio.unwrap_or(export.background_ratio),
                seed: p.seed.unwrap_or(export.seed),
                feature_config_hash: FeatureConfig::default().config_hash(),
                ..export
            };
            if export.min_count == 0 || !(export.background_ratio >= 0.0) {
                return Err(bad_request("min_count must be positive and background_ratio non-negative"));
            }
            let split = SplitSpec { seed: train.seed, ..SplitSpec::default() };
            Task::Train(TrainParams { export, split, train })
        }
        JobKind::Eval => {
            let p: EvalParams = params(req.params)?;
            let grid = match p.grid {
                Some(g) => parse_grid(&g).map_err(bad_request)?,
                None => default_grid(),
            };
            Task::Eval { target: p.target, grid }
        }
    };
    Ok((kind, task))
}

fn rel(ws: &Workspace, p: &Path) -> String {
    p.strip_prefix(ws.root()).unwrap_or(p).display().to_string()
}

fn run_task(st: &Shared, id: &str, task: Task) -> Result<(Option<String>, serde_json::Value), PipelineError> {
    let ws = &st.ws;
    let mut progress = |f: f64| st.jobs.progress(id, f);
    match task {
        Task::Embed => {
            let n = workflow::embed_workspace(ws, &FeatureConfig::default())?;
            Ok((Some(rel(ws, &ws.embeddings())), serde_json::json!({ "embeddings": n })))
        }
        Task::Reduce(p) => {
            let files = workflow::reduce_workspace(ws, &p, &mut progress)?;
            let names: Vec<String> = files.iter().map(|f| rel(ws, f)).collect();
            Ok((names.first().cloned(), serde_json::json!({ "files": names })))
        }
        Task::Train(p) => {
            let store = st.store.lock().expect("label store poisoned").detached();
            let out = workflow::train_workspace(ws, &store, &st.manifest, &p, &mut progress)?;
            let value = serde_json::to_value(&out).unwrap_or_default();
            Ok((Some(rel(ws, &out.model)), value))
        }
        Task::Eval { target, grid } => {
            let out = workflow::evaluate_workspace(ws, &target, &grid)?;
            Ok((
                Some(rel(ws, &out.files.summary)),
                serde_json::json!({ "best_tau": out.curve.best_tau, "best_f1": out.curve.best_f1, "argmax": out.argmax }),
            ))
        }
    }
}

async fn submit_job(State(st): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let req: JobRequest = serde_json::from_slice(&body).map_err(bad_request)?;
    let (kind, task) = parse_task(req)?;
    let status = st
        .jobs
        .submit(kind)
        .map_err(|c| ApiError::new(StatusCode::CONFLICT, format!("a {kind:?} job is already active: {}", c.0).to_lowercase()))?;
    let id = status.job_id.clone();
    let st2 = st.clone();
    tokio::task::spawn_blocking(move || {
        st2.jobs.start(&id);
        match run_task(&st2, &id, task) {
            Ok((result_ref, value)) => st2.jobs.finish(&id, result_ref, value),
            Err(e) => {
                tracing::warn!(job = %id, error = %e, "job failed");
                st2.jobs.fail(&id, e.to_string());
            }
        }
    });
    Ok((StatusCode::ACCEPTED, Json(status)).into_response())
}

async fn job_status(State(st): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<JobStatus>, ApiError> {
    st.jobs.get(&id).map(Json).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown job {id}")))
}

async fn list_jobs(State(st): State<Shared>) -> Json<Vec<JobStatus>> {
    Json(st.jobs.list())
}
