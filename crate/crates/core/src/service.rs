//! HTTP API.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/api/v1/analyses` | native landmark document, 201 with the analysis record |
//! | GET | `/api/v1/analyses/{id}` | the stored record |
//! | GET | `/api/v1/analyses/{id}/report?lang=en\|zh&format=text\|markdown\|structured` | rendered report |
//! | GET | `/api/v1/analyses/{id}/prompt?lang=&seed=` | prompt sample |
//! | POST | `/api/v1/sessions` | `{"analysis_id", "lang"}`, 201 `{"session_id"}` |
//! | POST | `/api/v1/sessions/{id}/messages` | `{"content"}`, 200 `{"reply", "message"}` |
//! | GET | `/api/v1/sessions/{id}` | session with full history |
//! | GET | `/healthz` | `{"status", "version", "backend_enabled"}` |
//!
//! Every non-2xx response body is `{"code", "message", "details"}`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::{to_bytes, Body, Bytes};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::analysis::{analyze, AnalysisConfig};
use crate::dialogue::{CompletionBackendConfig, DialogueError, DialogueGateway, Secret};
use crate::ingest::{load_norms, load_thresholds, parse_landmarks_json, IngestError};
use crate::report::{Language, ReportError, ReportFormat, Resources};
use crate::store::{AnalysisRecord, AnalysisStore};

pub const ENV_BIND_ADDR: &str = "CEPH_BIND_ADDR";
pub const ENV_NORMS_PATH: &str = "CEPH_NORMS_PATH";
pub const ENV_THRESHOLDS_PATH: &str = "CEPH_THRESHOLDS_PATH";
pub const ENV_TEMPLATES_DIR: &str = "CEPH_TEMPLATES_DIR";
pub const ENV_API_KEY: &str = "CEPH_API_KEY";
pub const ENV_CORS_ORIGINS: &str = "CEPH_CORS_ORIGINS";
pub const DEFAULT_BIND_ADDR: &str = "127.0.0.1:8080";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const API_KEY_HEADER: &str = "x-api-key";
const MAX_BODY_BYTES: usize = 2 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

/// Marks responses that already carry an envelope.
#[derive(Clone, Copy)]
struct Enveloped;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    envelope: ErrorEnvelope,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            envelope: ErrorEnvelope { code: code.to_string(), message: message.into(), details: Value::Null },
        }
    }

    fn with_details(mut self, details: Value) -> Self {
        self.envelope.details = details;
        self
    }

    fn bad_param(name: &str, message: String) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "INVALID_PARAMETER", message).with_details(json!({ "parameter": name }))
    }

    fn unknown_analysis(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "UNKNOWN_ANALYSIS", format!("no analysis with id {id:?}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut resp = (self.status, axum::Json(self.envelope)).into_response();
        resp.extensions_mut().insert(Enveloped);
        resp
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        let status = match e {
            IngestError::MissingCalibration => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string()).with_details(e.details())
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        let status = match e {
            ReportError::MissingMeasurement(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let details = match &e {
            ReportError::MissingMeasurement(id) => json!({ "measurement": id }),
            _ => Value::Null,
        };
        ApiError::new(status, e.code(), e.to_string()).with_details(details)
    }
}

impl From<DialogueError> for ApiError {
    fn from(e: DialogueError) -> Self {
        match e {
            DialogueError::Report(r) => r.into(),
            other => {
                let status = match other {
                    DialogueError::UnknownAnalysis(_) | DialogueError::UnknownSession(_) => StatusCode::NOT_FOUND,
                    DialogueError::EmptyMessage => StatusCode::BAD_REQUEST,
                    DialogueError::BackendUnreachable(_) => StatusCode::BAD_GATEWAY,
                    DialogueError::Report(_) => unreachable!(),
                };
                ApiError::new(status, other.code(), other.to_string())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind_addr: SocketAddr,
    pub norms_path: Option<PathBuf>,
    pub thresholds_path: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub api_key: Option<Secret>,
    pub cors_origins: Vec<String>,
    pub backend: CompletionBackendConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind_addr: DEFAULT_BIND_ADDR.parse().expect("valid default address"),
            norms_path: None,
            thresholds_path: None,
            templates_dir: None,
            api_key: None,
            cors_origins: Vec::new(),
            backend: CompletionBackendConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let get = |k: &str| lookup(k).map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        let mut cfg = ServiceConfig { backend: CompletionBackendConfig::from_lookup(&lookup)?, ..Default::default() };
        if let Some(addr) = get(ENV_BIND_ADDR) {
            cfg.bind_addr = addr.parse().map_err(|_| format!("{ENV_BIND_ADDR}: invalid address {addr:?}"))?;
        }
        cfg.norms_path = get(ENV_NORMS_PATH).map(PathBuf::from);
        cfg.thresholds_path = get(ENV_THRESHOLDS_PATH).map(PathBuf::from);
        cfg.templates_dir = get(ENV_TEMPLATES_DIR).map(PathBuf::from);
        cfg.api_key = get(ENV_API_KEY).map(Secret::new);
        if let Some(origins) = get(ENV_CORS_ORIGINS) {
            cfg.cors_origins = origins.split(',').map(|o| o.trim().to_string()).filter(|o| !o.is_empty()).collect();
        }
        Ok(cfg)
    }
}

pub struct AppState {
    pub store: Arc<AnalysisStore>,
    pub gateway: DialogueGateway,
    pub analysis_config: AnalysisConfig,
    pub resources: Arc<Resources>,
    pub api_key: Option<Secret>,
}

impl AppState {
    /// Offline state with built-in norms, thresholds and templates.
    pub fn builtin() -> Self {
        let store = Arc::new(AnalysisStore::new());
        let resources = Arc::new(Resources::builtin());
        AppState {
            gateway: DialogueGateway::offline(Arc::clone(&store), Arc::clone(&resources)),
            store,
            analysis_config: AnalysisConfig::default(),
            resources,
            api_key: None,
        }
    }

    /// Loads the configured tables and builds the dialogue backend.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, String> {
        let read = |p: &PathBuf| std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()));
        let mut analysis_config = AnalysisConfig::default();
        if let Some(p) = &config.norms_path {
            analysis_config.norms = load_norms(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?;
        }
        if let Some(p) = &config.thresholds_path {
            analysis_config.thresholds = load_thresholds(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?;
        }
        let resources = match &config.templates_dir {
            Some(dir) => Resources::load_dir(dir).map_err(|e| e.to_string())?,
            None => Resources::builtin(),
        };
        let store = Arc::new(AnalysisStore::new());
        let resources = Arc::new(resources);
        let gateway = DialogueGateway::from_config(Arc::clone(&store), Arc::clone(&resources), &config.backend)
            .map_err(|e| e.to_string())?;
        Ok(AppState { store, gateway, analysis_config, resources, api_key: config.api_key.clone() })
    }
}

type Shared = State<Arc<AppState>>;

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn record(state: &AppState, id: &str) -> Result<Arc<AnalysisRecord>, ApiError> {
    state.store.get(id).ok_or_else(|| ApiError::unknown_analysis(id))
}

fn param<T: std::str::FromStr<Err = String>>(
    query: &HashMap<String, String>,
    name: &str,
    default: T,
) -> Result<T, ApiError> {
    match query.get(name) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|e| ApiError::bad_param(name, e)),
    }
}

fn parse_json_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, "PARSE_ERROR", e.to_string())
            .with_details(json!({ "line": e.line(), "column": e.column() }))
    })
}

async fn create_analysis(State(state): Shared, body: Bytes) -> Result<Response, ApiError> {
    let case = parse_landmarks_json(&body)?;
    let analysis = analyze(&case, &state.analysis_config)?;
    let record = state.store.insert(AnalysisRecord::new(case, analysis));
    tracing::info!(id = %record.id, "analysis created");
    Ok(json_response(StatusCode::CREATED, record.json().to_string()))
}

async fn get_analysis(State(state): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(json_response(StatusCode::OK, record(&state, &id)?.json().to_string()))
}

async fn get_report(
    State(state): Shared,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let lang = param(&query, "lang", Language::En)?;
    let format = param(&query, "format", ReportFormat::Text)?;
    let record = record(&state, &id)?;
    let body = record.report(lang, &state.resources)?.render(format);
    Ok((StatusCode::OK, [(header::CONTENT_TYPE, format.content_type())], body).into_response())
}

async fn get_prompt(
    State(state): Shared,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let lang = param(&query, "lang", Language::En)?;
    let seed = match query.get("seed") {
        None => rand::random::<u64>(),
        Some(s) => s
            .parse::<u64>()
            .map_err(|_| ApiError::bad_param("seed", format!("invalid seed {s:?}, expected an unsigned integer")))?,
    };
    let record = record(&state, &id)?;
    let sample = record.analysis.prompt(lang, &state.resources, seed, None)?;
    Ok(json_response(StatusCode::OK, serde_json::to_string(&sample).expect("prompt serializes")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpenSession {
    analysis_id: String,
    #[serde(default)]
    lang: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PostMessage {
    content: String,
}

async fn open_session(State(state): Shared, body: Bytes) -> Result<Response, ApiError> {
    let req: OpenSession = parse_json_body(&body)?;
    let lang = match req.lang.as_deref() {
        None => Language::En,
        Some(l) => l.parse().map_err(|e| ApiError::bad_param("lang", e))?,
    };
    let session = state.gateway.open_session(&req.analysis_id, lang)?;
    let body = json!({ "session_id": session.id, "analysis_id": session.analysis_id, "language": lang });
    Ok(json_response(StatusCode::CREATED, body.to_string()))
}

async fn post_message(State(state): Shared, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: PostMessage = parse_json_body(&body)?;
    let message = state.gateway.ask(&id, &req.content).await?;
    let body = json!({ "reply": message.content, "message": message });
    Ok(json_response(StatusCode::OK, body.to_string()))
}

async fn get_session(State(state): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = state.gateway.session(&id).await?;
    Ok(json_response(StatusCode::OK, serde_json::to_string(&session).expect("session serializes")))
}

async fn healthz(State(state): Shared) -> Response {
    let body = json!({ "status": "ok", "version": VERSION, "backend_enabled": state.gateway.backend_enabled() });
    json_response(StatusCode::OK, body.to_string())
}

async fn not_found(method: Method, uri: axum::http::Uri) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", format!("no route for {method} {}", uri.path()))
}

async fn require_api_key(State(state): Shared, req: Request, next: Next) -> Result<Response, ApiError> {
    if let Some(expected) = &state.api_key {
        let given = req.headers().get(API_KEY_HEADER).and_then(|v| v.to_str().ok());
        if given != Some(expected.expose()) {
            return Err(ApiError::new(StatusCode::UNAUTHORIZED, "UNAUTHORIZED", "missing or invalid API key"));
        }
    }
    Ok(next.run(req).await)
}

fn status_code_name(status: StatusCode) -> String {
    status
        .canonical_reason()
        .unwrap_or("ERROR")
        .to_ascii_uppercase()
        .replace([' ', '-'], "_")
}

/// Wraps framework-generated error responses (405, 413, extractor rejections) in an envelope.
async fn ensure_envelope(req: Request, next: Next) -> Response {
    let resp = next.run(req).await;
    let status = resp.status();
    if status.is_success() || status.is_informational() || resp.extensions().get::<Enveloped>().is_some() {
        return resp;
    }
    let (parts, body) = resp.into_parts();
    let text = to_bytes(body, 64 * 1024)
        .await
        .map(|b| String::from_utf8_lossy(&b).into_owned())
        .unwrap_or_default();
    let message = if text.trim().is_empty() { status.canonical_reason().unwrap_or("error").to_string() } else { text };
    let mut out = ApiError::new(status, &status_code_name(status), message).into_response();
    for name in [header::ALLOW, header::WWW_AUTHENTICATE] {
        if let Some(v) = parts.headers.get(&name) {
            out.headers_mut().insert(name, v.clone());
        }
    }
    out
}

fn cors_layer(origins: &[String]) -> Option<CorsLayer> {
    if origins.is_empty() {
        return None;
    }
    let values: Vec<HeaderValue> = origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    Some(
        CorsLayer::new()
            .allow_origin(AllowOrigin::list(values))
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([header::CONTENT_TYPE, header::HeaderName::from_static(API_KEY_HEADER)]),
    )
}

pub fn router(state: Arc<AppState>) -> Router {
    router_with_cors(state, &[])
}

pub fn router_with_cors(state: Arc<AppState>, cors_origins: &[String]) -> Router {
    let api = Router::new()
        .route("/analyses", post(create_analysis))
        .route("/analyses/{id}", get(get_analysis))
        .route("/analyses/{id}/report", get(get_report))
        .route("/analyses/{id}/prompt", get(get_prompt))
        .route("/sessions", post(open_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route_layer(middleware::from_fn_with_state(Arc::clone(&state), require_api_key));
    let mut app = Router::new()
        .route("/healthz", get(healthz))
        .nest("/api/v1", api)
        .fallback(not_found)
        .layer(axum::extract::DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(middleware::from_fn(ensure_envelope))
        .with_state(state);
    if let Some(cors) = cors_layer(cors_origins) {
        app = app.layer(cors);
    }
    app
}

/// Binds and serves until `shutdown` resolves.
pub async fn serve(
    config: ServiceConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), String> {
    let state = Arc::new(AppState::from_config(&config)?);
    let app = router_with_cors(state, &config.cors_origins);
    let listener = tokio::net::TcpListener::bind(config.bind_addr)
        .await
        .map_err(|e| format!("cannot bind {}: {e}", config.bind_addr))?;
    tracing::info!(addr = %config.bind_addr, backend = config.backend.enabled(), "listening");
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await.map_err(|e| e.to_string())
}

/// Response body helper for tests and clients.
pub async fn body_bytes(body: Body) -> Bytes {
    to_bytes(body, usize::MAX).await.unwrap_or_default()
}
