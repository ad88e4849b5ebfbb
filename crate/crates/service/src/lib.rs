//! HTTP job service.
//!
//! Jobs are queued in a bounded queue and executed one at a time by a single
//! worker. Finished runs are written as ordinary run-record files, the same
//! format the command-line batch produces. Request bodies may be JSON or, with
//! a `toml` content type, the workspace file syntax.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/api/jobs` | submit a job |
//! | GET | `/api/jobs` | all jobs |
//! | GET | `/api/jobs/{id}` | status snapshot |
//! | GET | `/api/jobs/{id}/solutions` | successful and front-0 solutions |
//! | GET | `/api/jobs/{id}/events` | server-sent progress events |
//! | GET | `/api/workspace` | inventory, targets and settings |
//! | PUT | `/api/workspace/inventory` | replace the inventory |
//! | POST | `/api/analysis/distance-matrix` | pairwise genome distances |

mod jobs;

pub use jobs::{
    JobEvent, JobSnapshot, JobState, JobSummary, Progress, Registry, ResolvedSpec, ServedSolution,
    SolutionSet,
};

use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use futures::Stream;
use revbrew::analysis::{distance_matrix, normalized_distance_matrix, DEFAULT_SUCCESS_THRESHOLD};
use revbrew::evo::{Algorithm, Bounds};
use revbrew::io::{IoError, Workspace};
use revbrew::model::{Inventory, TargetProfile};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub workspace: Workspace,
    /// Where inventory edits are saved; `None` keeps them in memory.
    pub workspace_dir: Option<PathBuf>,
    pub results_dir: PathBuf,
    pub queue_capacity: usize,
    /// A progress event is emitted every this many generations.
    pub progress_stride: usize,
}

impl ServiceConfig {
    pub fn new(workspace: Workspace, results_dir: impl Into<PathBuf>) -> Self {
        Self {
            workspace,
            workspace_dir: None,
            results_dir: results_dir.into(),
            queue_capacity: 64,
            progress_stride: 10,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    registry: Arc<Registry>,
    workspace: Arc<RwLock<Workspace>>,
    workspace_dir: Option<PathBuf>,
}

impl AppState {
    /// Must be called inside a tokio runtime; starts the job worker.
    pub fn start(config: ServiceConfig) -> Self {
        Self {
            registry: Registry::start(
                config.queue_capacity,
                config.progress_stride,
                config.results_dir,
            ),
            workspace: Arc::new(RwLock::new(config.workspace)),
            workspace_dir: config.workspace_dir,
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    fn workspace(&self) -> Workspace {
        self.workspace.read().expect("workspace lock").clone()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/jobs", post(submit_job).get(list_jobs))
        .route("/api/jobs/{id}", get(job_status))
        .route("/api/jobs/{id}/solutions", get(job_solutions))
        .route("/api/jobs/{id}/events", get(job_events))
        .route("/api/workspace", get(get_workspace))
        .route("/api/workspace/inventory", put(put_inventory))
        .route("/api/analysis/distance-matrix", post(post_distance_matrix))
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(config: ServiceConfig, addr: SocketAddr) -> std::io::Result<()> {
    serve_on(tokio::net::TcpListener::bind(addr).await?, config).await
}

/// Serves on an already bound listener.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    config: ServiceConfig,
) -> std::io::Result<()> {
    let app = router(AppState::start(config));
    axum::serve(listener, app).await
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    Validation { field: String, message: String },
    NotFound(String),
    Conflict(String),
    Unavailable(String),
    Internal(String),
}

impl ApiError {
    fn invalid(field: impl Into<String>, message: impl ToString) -> Self {
        ApiError::Validation {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": m })),
            ApiError::Validation { field, message } => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": message, "field": field }),
            ),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": m })),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, json!({ "error": m })),
            ApiError::Unavailable(m) => (StatusCode::SERVICE_UNAVAILABLE, json!({ "error": m })),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": m })),
        };
        (status, Json(body)).into_response()
    }
}

fn is_toml(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("toml"))
}

fn parse_body<T: DeserializeOwned>(headers: &HeaderMap, body: &Bytes) -> Result<T, ApiError> {
    if is_toml(headers) {
        let text = std::str::from_utf8(body).map_err(|e| ApiError::BadRequest(e.to_string()))?;
        toml::from_str(text).map_err(|e| ApiError::BadRequest(e.to_string()))
    } else {
        serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
    }
}

/// Job submission. Either `product` (catalogue number or name) or a full
/// `target` is required; everything else falls back to the workspace.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRequest {
    pub product: Option<String>,
    pub target: Option<TargetProfile>,
    pub inventory: Option<Inventory>,
    pub algorithm: Option<String>,
    pub seed: Option<u64>,
    pub generations: Option<usize>,
    pub population_size: Option<usize>,
    pub max_evaluations: Option<u64>,
    pub threshold: Option<f64>,
}

fn resolve(ws: &Workspace, req: JobRequest) -> Result<ResolvedSpec, ApiError> {
    let (product, target) = match (req.product, req.target) {
        (Some(_), Some(_)) => {
            return Err(ApiError::invalid("target", "give either product or target, not both"))
        }
        (Some(p), None) => {
            let (n, t) = ws.resolve_product(&p).map_err(|e| ApiError::invalid("product", e))?;
            (Some(n), t.clone())
        }
        (None, Some(t)) => {
            t.validate().map_err(|e| ApiError::invalid("target", e))?;
            (None, t)
        }
        (None, None) => return Err(ApiError::invalid("product", "product or target is required")),
    };
    let inventory = match req.inventory {
        Some(inv) => {
            inv.validate().map_err(|e| ApiError::invalid("inventory", e))?;
            inv
        }
        None => ws.inventory.clone(),
    };
    let algorithm = match req.algorithm.as_deref().unwrap_or("nsga2") {
        "nsga2" => Algorithm::Nsga2,
        "de" | "de-best1" => Algorithm::DeBest1,
        other => {
            return Err(ApiError::invalid(
                "algorithm",
                format!("unknown algorithm {other:?} (expected nsga2 or de)"),
            ))
        }
    };
    let threshold = req.threshold.unwrap_or(DEFAULT_SUCCESS_THRESHOLD);
    if !(threshold >= 0.0) {
        return Err(ApiError::invalid("threshold", "must be >= 0"));
    }
    let mut nsga2 = ws.nsga2.clone();
    let mut de = ws.de.clone();
    if let Some(g) = req.generations {
        nsga2.generations = g;
    }
    if let Some(p) = req.population_size {
        nsga2.population_size = p;
        de.population_size = p;
    }
    if let Some(m) = req.max_evaluations {
        de.max_evaluations = m;
    }
    let engine = jobs::engine_config(algorithm, &nsga2, &de, req.seed.unwrap_or(1), threshold);
    let check = match &engine {
        revbrew::evo::EngineConfig::Nsga2(c) => c.validate(),
        revbrew::evo::EngineConfig::DeBest1(c) => c.validate(),
    };
    check.map_err(|e| ApiError::invalid("config", e))?;
    Ok(ResolvedSpec {
        product,
        target,
        inventory,
        brew: ws.brew.clone(),
        engine,
        threshold,
    })
}

async fn submit_job(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<JobSnapshot>), ApiError> {
    let req: JobRequest = parse_body(&headers, &body)?;
    let spec = resolve(&state.workspace(), req)?;
    let snapshot = state.registry.submit(spec).map_err(|e| match e {
        jobs::SubmitError::QueueFull(_) => ApiError::Unavailable(e.to_string()),
        jobs::SubmitError::WorkerGone => ApiError::Internal(e.to_string()),
    })?;
    Ok((StatusCode::ACCEPTED, Json(snapshot)))
}

async fn list_jobs(State(state): State<AppState>) -> Json<Vec<JobSnapshot>> {
    Json(state.registry.list())
}

fn find(state: &AppState, id: &str) -> Result<Arc<jobs::Job>, ApiError> {
    state
        .registry
        .get(id)
        .ok_or_else(|| ApiError::NotFound(format!("no job {id:?}")))
}

async fn job_status(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<JobSnapshot>, ApiError> {
    Ok(Json(find(&state, &id)?.snapshot()))
}

async fn job_solutions(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SolutionSet>, ApiError> {
    let job = find(&state, &id)?;
    let snap = job.snapshot();
    match job.result() {
        Some(result) => Ok(Json(jobs::solution_set(&snap.spec, &result))),
        None => Err(ApiError::Conflict(format!(
            "job {id} is {:?}; solutions exist once it is done",
            snap.state
        ))),
    }
}

fn event_stream(job: Arc<jobs::Job>) -> impl Stream<Item = Result<Event, Infallible>> {
    let rx = job.subscribe();
    futures::stream::unfold((job, rx, 0usize, false), |(job, mut rx, next, finished)| async move {
        if finished {
            return None;
        }
        loop {
            rx.borrow_and_update();
            if let Some(ev) = job.event(next) {
                let terminal = ev.is_terminal();
                let sse = Event::default()
                    .event(ev.name())
                    .json_data(&ev)
                    .expect("events serialise");
                return Some((Ok(sse), (job, rx, next + 1, terminal)));
            }
            if rx.changed().await.is_err() {
                return None;
            }
        }
    })
}

async fn job_events(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let job = find(&state, &id)?;
    Ok(Sse::new(event_stream(job)).keep_alive(KeepAlive::default()))
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

#[derive(Serialize)]
struct WorkspaceView {
    inventory: Inventory,
    ingredients: Vec<String>,
    targets: Vec<TargetProfile>,
    brew: revbrew::model::BrewConfig,
    nsga2: revbrew::evo::NsgaConfig,
    de: revbrew::evo::DeConfig,
}

async fn get_workspace(State(state): State<AppState>, Query(q): Query<FormatQuery>) -> Response {
    let ws = state.workspace();
    if q.format.as_deref() == Some("toml") {
        let files = ws.to_files();
        return Json(json!({
            "inventory.toml": files.inventory,
            "targets.toml": files.targets,
            "workbench.toml": files.workbench,
        }))
        .into_response();
    }
    Json(WorkspaceView {
        ingredients: ws.inventory.names().iter().map(|s| s.to_string()).collect(),
        inventory: ws.inventory,
        targets: ws.targets,
        brew: ws.brew,
        nsga2: ws.nsga2,
        de: ws.de,
    })
    .into_response()
}

async fn put_inventory(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<Inventory>, ApiError> {
    let inventory: Inventory = parse_body(&headers, &body)?;
    inventory
        .validate()
        .map_err(|e| ApiError::invalid("inventory", e))?;
    let updated = {
        let mut ws = state.workspace.write().expect("workspace lock");
        ws.inventory = inventory.clone();
        ws.clone()
    };
    if let Some(dir) = &state.workspace_dir {
        let text = revbrew::io::inventory_to_toml(&updated.inventory);
        revbrew::io::write_atomic(&dir.join(revbrew::io::INVENTORY_FILE), text.as_bytes())
            .map_err(|e: IoError| ApiError::Internal(e.to_string()))?;
    }
    Ok(Json(inventory))
}

/// Distances over explicit genomes, or over the solutions of a finished job.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistanceRequest {
    job: Option<String>,
    /// `successful` (default) or `front0`; only with `job`.
    which: Option<String>,
    genomes: Option<Vec<Vec<f64>>>,
    labels: Option<Vec<String>>,
    #[serde(default)]
    normalize: bool,
}

async fn post_distance_matrix(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<revbrew::analysis::DistanceMatrix>, ApiError> {
    let req: DistanceRequest = parse_body(&headers, &body)?;
    let (genomes, inventory) = match (&req.job, req.genomes) {
        (Some(id), None) => {
            let job = find(&state, id)?;
            let snap = job.snapshot();
            let result = job.result().ok_or_else(|| {
                ApiError::Conflict(format!("job {id} is {:?}, not done", snap.state))
            })?;
            let set = jobs::solution_set(&snap.spec, &result);
            let chosen = match req.which.as_deref().unwrap_or("successful") {
                "successful" => set.successful,
                "front0" => set.front0,
                other => {
                    return Err(ApiError::invalid(
                        "which",
                        format!("expected successful or front0, got {other:?}"),
                    ))
                }
            };
            let genomes = chosen.into_iter().map(|s| s.solution.genome.0).collect();
            (genomes, snap.spec.inventory)
        }
        (None, Some(g)) => (g, state.workspace().inventory),
        _ => return Err(ApiError::invalid("genomes", "give exactly one of job or genomes")),
    };
    if let Some(labels) = &req.labels {
        if labels.len() != genomes.len() {
            return Err(ApiError::invalid(
                "labels",
                format!("{} labels for {} genomes", labels.len(), genomes.len()),
            ));
        }
    }
    let refs: Vec<&[f64]> = genomes.iter().map(Vec::as_slice).collect();
    let m = if req.normalize {
        let bounds = Bounds::from_upper(inventory.upper_bounds())
            .map_err(|e| ApiError::invalid("inventory", e))?;
        normalized_distance_matrix(&refs, &bounds, req.labels)
    } else {
        distance_matrix(&refs, req.labels)
    };
    m.map(Json).map_err(|e| ApiError::invalid("genomes", e))
}
