//! JSON-over-HTTP access to active-learning sessions, under `/api/v1`.
//!
//! Each session has a single writer (a mutex around the session and its
//! log file). Readers see the last committed snapshot and never wait on a
//! retrain. Every mutation appends its events to
//! `<data_dir>/<session_id>.events.jsonl` before it is acknowledged.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use anyhow::Context;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use patland_core::active::{
    read_events, replay, write_events, ActiveError, ActiveLearningSession, Candidate, SessionConfig, SessionStats,
};
use patland_core::corpus::{CorpusStore, Label, LabeledExample};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub const API_PREFIX: &str = "/api/v1";
pub const CLAIMS_EXCERPT_CHARS: usize = 1000;
pub const DEFAULT_QUEUE_K: usize = 10;
pub const MAX_QUEUE_K: usize = 1000;
const LOG_SUFFIX: &str = ".events.jsonl";

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: None,
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<&'a Value>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code,
            message: &self.message,
            detail: self.detail.as_ref(),
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<ActiveError> for ApiError {
    fn from(e: ActiveError) -> Self {
        let message = e.to_string();
        match e {
            ActiveError::UnknownPatent(id) => {
                ApiError::not_found(message).with_detail(json!({ "patent_id": id }))
            }
            ActiveError::LabelConflict {
                patent_id,
                existing,
                existing_annotator,
            } => ApiError::new(StatusCode::CONFLICT, "conflict", message).with_detail(json!({
                "patent_id": patent_id,
                "existing_label": existing,
                "existing_annotator": existing_annotator,
            })),
            ActiveError::NotInPool(id) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "not_in_pool", message)
                .with_detail(json!({ "patent_id": id })),
            ActiveError::InvalidSetup(_) => ApiError::invalid(message),
            _ => ApiError::internal(message),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(r.status(), "invalid_request", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::invalid(r.body_text())
    }
}

/// What readers see: the queue and stats as of the last committed write.
struct Snapshot {
    queue: Vec<Candidate>,
    stats: SessionStats,
}

struct Writer {
    session: ActiveLearningSession,
    persisted: usize,
    log: Option<PathBuf>,
}

impl Writer {
    fn flush(&mut self) -> Result<(), ApiError> {
        let Some(path) = &self.log else {
            self.persisted = self.session.events().len();
            return Ok(());
        };
        let fresh = &self.session.events()[self.persisted..];
        if fresh.is_empty() {
            return Ok(());
        }
        let io = |e: std::io::Error| ApiError::internal(format!("event log {}: {e}", path.display()));
        let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        let mut buf = Vec::new();
        write_events(fresh, &mut buf).map_err(io)?;
        f.write_all(&buf).map_err(io)?;
        f.sync_data().map_err(io)?;
        self.persisted = self.session.events().len();
        Ok(())
    }
}

struct SessionSlot {
    writer: Mutex<Writer>,
    snapshot: RwLock<Arc<Snapshot>>,
    /// Patent ids handed to each annotator by the queue endpoint.
    served: Mutex<BTreeMap<String, BTreeSet<String>>>,
}

impl SessionSlot {
    fn new(writer: Writer) -> Self {
        let snapshot = snapshot_of(&writer.session);
        SessionSlot {
            writer: Mutex::new(writer),
            snapshot: RwLock::new(Arc::new(snapshot)),
            served: Mutex::new(BTreeMap::new()),
        }
    }

    fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }
}

fn snapshot_of(s: &ActiveLearningSession) -> Snapshot {
    Snapshot {
        queue: s.queue().to_vec(),
        stats: s.stats(),
    }
}

pub struct AppState {
    corpus: Arc<CorpusStore>,
    sessions: RwLock<BTreeMap<String, Arc<SessionSlot>>>,
    data_dir: Option<PathBuf>,
}

fn valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !id.starts_with('.')
}

impl AppState {
    /// Creates the state and replays every event log found in `data_dir`.
    pub fn new(corpus: Arc<CorpusStore>, data_dir: Option<PathBuf>) -> anyhow::Result<Self> {
        let state = AppState {
            corpus,
            sessions: RwLock::new(BTreeMap::new()),
            data_dir,
        };
        if let Some(dir) = &state.data_dir {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut logs: Vec<PathBuf> = fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.to_string_lossy().ends_with(LOG_SUFFIX))
                .collect();
            logs.sort();
            for path in logs {
                state.recover(&path).with_context(|| format!("replaying {}", path.display()))?;
            }
        }
        Ok(state)
    }

    fn recover(&self, path: &Path) -> anyhow::Result<()> {
        let events = read_events(BufReader::new(File::open(path)?))?;
        let session = replay(&self.corpus, &events)?;
        let id = session.id().to_string();
        log::info!("recovered session {id} ({} events)", events.len());
        let writer = Writer {
            persisted: session.events().len(),
            session,
            log: Some(path.to_path_buf()),
        };
        self.sessions.write().expect("sessions lock").insert(id, Arc::new(SessionSlot::new(writer)));
        Ok(())
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().expect("sessions lock").keys().cloned().collect()
    }

    fn slot(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id:?}")).with_detail(json!({ "session_id": id })))
    }

    /// Initializes, persists and registers a new session.
    pub fn create_session(&self, seeds: Vec<LabeledExample>, config: SessionConfig) -> Result<SessionStats, ApiError> {
        let id = config.session_id.clone();
        if !valid_session_id(&id) {
            return Err(ApiError::invalid(format!(
                "session id {id:?} must be 1-64 characters of letters, digits, '-', '_' or '.'"
            )));
        }
        if self.sessions.read().expect("sessions lock").contains_key(&id) {
            return Err(ApiError::new(StatusCode::CONFLICT, "conflict", format!("session {id:?} already exists"))
                .with_detail(json!({ "session_id": id })));
        }
        let session = ActiveLearningSession::init(&self.corpus, seeds, config)?;
        let log = self.data_dir.as_ref().map(|d| d.join(format!("{id}{LOG_SUFFIX}")));
        if let Some(path) = &log {
            if path.exists() {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "conflict",
                    format!("an event log for session {id:?} already exists"),
                ));
            }
        }
        let mut writer = Writer {
            session,
            persisted: 0,
            log,
        };
        writer.flush()?;
        let stats = writer.session.stats();
        let mut sessions = self.sessions.write().expect("sessions lock");
        if sessions.contains_key(&id) {
            return Err(ApiError::new(StatusCode::CONFLICT, "conflict", format!("session {id:?} already exists")));
        }
        sessions.insert(id, Arc::new(SessionSlot::new(writer)));
        Ok(stats)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueueParams {
    k: Option<usize>,
    annotator_id: Option<String>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct QueueItem {
    pub patent_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub claims_excerpt: String,
    pub claims_truncated: bool,
    pub cpc_codes: Vec<String>,
    /// Distance from the decision surface; smaller is more uncertain.
    pub margin_distance: f64,
    pub decision_value: f64,
}

fn excerpt(text: &str) -> (String, bool) {
    match text.char_indices().nth(CLAIMS_EXCERPT_CHARS) {
        Some((cut, _)) => (text[..cut].to_string(), true),
        None => (text.to_string(), false),
    }
}

async fn queue(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    params: Result<Query<QueueParams>, QueryRejection>,
) -> Result<Json<Vec<QueueItem>>, ApiError> {
    let Query(params) = params?;
    let k = params.k.unwrap_or(DEFAULT_QUEUE_K);
    if k > MAX_QUEUE_K {
        return Err(ApiError::invalid(format!("k must be at most {MAX_QUEUE_K}")));
    }
    let slot = state.slot(&id)?;
    let snap = slot.snapshot();
    let items: Vec<QueueItem> = snap.queue[..k.min(snap.queue.len())]
        .iter()
        .map(|c| {
            let rec = state.corpus.get(&c.patent_id);
            let (claims_excerpt, claims_truncated) = excerpt(rec.map(|r| r.claims.as_str()).unwrap_or(""));
            QueueItem {
                patent_id: c.patent_id.clone(),
                title: rec.map(|r| r.title.clone()).unwrap_or_default(),
                abstract_text: rec.map(|r| r.abstract_text.clone()).unwrap_or_default(),
                claims_excerpt,
                claims_truncated,
                cpc_codes: rec.map(|r| r.cpc_codes.clone()).unwrap_or_default(),
                margin_distance: c.margin_distance,
                decision_value: c.decision_value,
            }
        })
        .collect();
    if let Some(annotator) = params.annotator_id {
        let mut served = slot.served.lock().expect("served lock");
        served.entry(annotator).or_default().extend(items.iter().map(|i| i.patent_id.clone()));
    }
    Ok(Json(items))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelBody {
    patent_id: String,
    label: Label,
    annotator_id: String,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct LabelAck {
    pub retrained: bool,
    pub labels_total: usize,
}

async fn submit_label(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<LabelBody>, JsonRejection>,
) -> Result<Json<LabelAck>, ApiError> {
    let Json(body) = body?;
    if body.annotator_id.trim().is_empty() {
        return Err(ApiError::invalid("annotator_id must not be empty"));
    }
    let slot = state.slot(&id)?;
    let ack = tokio::task::spawn_blocking(move || -> Result<LabelAck, ApiError> {
        let mut w = slot.writer.lock().map_err(|_| ApiError::internal("session writer poisoned"))?;
        let outcome = w.session.submit_label(&body.patent_id, body.label, &body.annotator_id);
        // A rejected duplicate is still logged as a judgment.
        w.flush()?;
        *slot.snapshot.write().expect("snapshot lock") = Arc::new(snapshot_of(&w.session));
        let outcome = outcome?;
        if let Some(e) = &outcome.retrain_error {
            log::warn!("session {}: {e}", w.session.id());
        }
        Ok(LabelAck {
            retrained: outcome.retrained,
            labels_total: outcome.labels_total,
        })
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(ack))
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct StatsResponse {
    #[serde(flatten)]
    pub stats: SessionStats,
    /// Items handed out per annotator by the queue endpoint.
    pub served_by_annotator: BTreeMap<String, usize>,
}

async fn stats(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<StatsResponse>, ApiError> {
    let slot = state.slot(&id)?;
    let stats = slot.snapshot().stats.clone();
    let served = slot.served.lock().expect("served lock").iter().map(|(a, s)| (a.clone(), s.len())).collect();
    Ok(Json(StatsResponse {
        stats,
        served_by_annotator: served,
    }))
}

async fn list_sessions(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "sessions": state.session_ids() }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    session_id: String,
    seeds: Vec<String>,
    #[serde(default)]
    anti_seeds: Vec<String>,
    /// Session settings; `session_id` here is ignored.
    #[serde(default)]
    config: Option<SessionConfig>,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateBody>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionStats>), ApiError> {
    let Json(body) = body?;
    let mut config = body.config.unwrap_or_default();
    config.session_id = body.session_id;
    let now = chrono::Utc::now();
    let mut examples: Vec<LabeledExample> = body.seeds.iter().map(|id| LabeledExample::seed(id, now)).collect();
    examples.extend(body.anti_seeds.iter().map(|id| LabeledExample::anti_seed(id, now)));
    for id in body.seeds.iter().chain(&body.anti_seeds) {
        if !state.corpus.contains(id) {
            return Err(ApiError::not_found(format!("unknown patent id {id:?}")).with_detail(json!({ "patent_id": id })));
        }
    }
    let stats = tokio::task::spawn_blocking(move || state.create_session(examples, config))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(stats)))
}

async fn patent(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    match state.corpus.get(&id) {
        Some(r) => Ok(Json(r).into_response()),
        None => Err(ApiError::not_found(format!("unknown patent id {id:?}")).with_detail(json!({ "patent_id": id }))),
    }
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn no_route() -> ApiError {
    ApiError::not_found("no such endpoint")
}

async fn bad_method() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed for this endpoint")
}

fn cors(origins: &[String]) -> anyhow::Result<CorsLayer> {
    let allow = if origins.iter().any(|o| o == "*") {
        AllowOrigin::any()
    } else {
        let list = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).with_context(|| format!("bad CORS origin {o:?}")))
            .collect::<anyhow::Result<Vec<_>>>()?;
        AllowOrigin::list(list)
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]))
}

pub fn router(state: Arc<AppState>, cors_origins: &[String]) -> anyhow::Result<Router> {
    let api = Router::new()
        .route("/health", get(health))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}/queue", get(queue))
        .route("/sessions/{id}/labels", post(submit_label))
        .route("/sessions/{id}/stats", get(stats))
        .route("/patents/{id}", get(patent))
        .method_not_allowed_fallback(bad_method)
        .with_state(state);
    Ok(Router::new()
        .nest(API_PREFIX, api)
        .fallback(no_route)
        .layer(cors(cors_origins)?))
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: &str, cors_origins: &[String]) -> anyhow::Result<()> {
    let app = router(state, cors_origins)?;
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    log::info!("listening on http://{}{API_PREFIX}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
