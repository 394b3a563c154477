//! REST routes over a [`Store`].

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::{to_bytes, Body, Bytes};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tower_http::services::ServeDir;
use utterancesmith::extract::FormatHint;
use utterancesmith::generation::CandidateStatus;

use crate::error::ServiceError;
use crate::store::{DecisionInput, ExportFormat, GenerateRequest, Store, TrainRequest};

pub const REQUEST_ID_HEADER: &str = "x-request-id";

#[derive(Clone)]
struct Cached {
    status: StatusCode,
    content_type: Option<HeaderValue>,
    body: Bytes,
}

type Slot = Arc<tokio::sync::Mutex<Option<Cached>>>;

#[derive(Clone)]
pub struct AppState {
    store: Arc<Store>,
    replies: Arc<Mutex<HashMap<String, Slot>>>,
}

impl AppState {
    pub fn new(store: Arc<Store>) -> Self {
        Self {
            store,
            replies: Arc::new(Mutex::new(HashMap::new())),
        }
    }
}

/// The API router. When `ui_dir` is given its files are served under `/`.
pub fn router(store: Arc<Store>, ui_dir: Option<PathBuf>) -> Router {
    let state = AppState::new(store);
    let api = Router::new()
        .route("/api/projects", post(create_project).get(list_projects))
        .route("/api/projects/{id}", get(get_project))
        .route("/api/projects/{id}/spec", post(ingest_spec))
        .route("/api/projects/{id}/operations", get(operations))
        .route("/api/projects/{id}/generate", post(generate))
        .route("/api/projects/{id}/candidates", get(candidates))
        .route("/api/projects/{id}/review", post(review))
        .route("/api/projects/{id}/train", post(train))
        .route("/api/projects/{id}/classify", post(classify))
        .route("/api/projects/{id}/export", get(export))
        .layer(middleware::from_fn_with_state(state.clone(), idempotent))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { (StatusCode::NOT_FOUND, Json(serde_json::json!({"error": "NotFound", "detail": "no such route"}))) }),
    }
}

/// Replays the stored response for a repeated POST carrying the same
/// request id. Only successful responses are remembered.
async fn idempotent(State(state): State<AppState>, request: Request, next: Next) -> Response {
    let key = (request.method() == Method::POST)
        .then(|| request.headers().get(REQUEST_ID_HEADER))
        .flatten()
        .and_then(|v| v.to_str().ok())
        .map(|rid| format!("{} {rid}", request.uri().path()));
    let Some(key) = key else {
        return next.run(request).await;
    };
    let slot = state.replies.lock().expect("reply table").entry(key).or_default().clone();
    let mut cached = slot.lock().await;
    if let Some(c) = cached.as_ref() {
        let mut response = (c.status, c.body.clone()).into_response();
        if let Some(ct) = &c.content_type {
            response.headers_mut().insert(header::CONTENT_TYPE, ct.clone());
        }
        return response;
    }
    let response = next.run(request).await;
    let (parts, body) = response.into_parts();
    let Ok(bytes) = to_bytes(body, usize::MAX).await else {
        return StatusCode::INTERNAL_SERVER_ERROR.into_response();
    };
    if parts.status.is_success() {
        *cached = Some(Cached {
            status: parts.status,
            content_type: parts.headers.get(header::CONTENT_TYPE).cloned(),
            body: bytes.clone(),
        });
    }
    Response::from_parts(parts, Body::from(bytes))
}

fn parse<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ServiceError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ServiceError::InvalidRequest(format!("bad JSON body: {e}")))
}

async fn blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::StoreUnwritable(format!("worker failed: {e}")))?
}

#[derive(Deserialize, Default)]
struct CreateProject {
    name: String,
}

async fn create_project(State(s): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: CreateProject = parse(&body)?;
    let project = blocking(move || s.store.create_project(&req.name)).await?;
    Ok((StatusCode::CREATED, Json(project.summary())))
}

async fn list_projects(State(s): State<AppState>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(blocking(move || s.store.list_projects()).await?))
}

async fn get_project(State(s): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(blocking(move || s.store.project(&id)).await?.summary()))
}

async fn ingest_spec(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<impl IntoResponse, ServiceError> {
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("");
    let hint = if content_type.contains("json") {
        FormatHint::Json
    } else if content_type.contains("yaml") {
        FormatHint::Yaml
    } else {
        FormatHint::Auto
    };
    Ok(Json(blocking(move || s.store.ingest_spec(&id, &body, hint)).await?))
}

async fn operations(State(s): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(blocking(move || s.store.operations(&id)).await?))
}

async fn generate(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: GenerateRequest = parse(&body)?;
    Ok(Json(blocking(move || s.store.generate(&id, &req)).await?))
}

#[derive(Deserialize)]
struct CandidateQuery {
    operation: Option<String>,
    status: Option<String>,
}

async fn candidates(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<CandidateQuery>,
) -> Result<impl IntoResponse, ServiceError> {
    let status = q
        .status
        .map(|st| {
            serde_json::from_value::<CandidateStatus>(serde_json::Value::String(st.clone()))
                .map_err(|_| ServiceError::InvalidRequest(format!("unknown status {st:?}")))
        })
        .transpose()?;
    Ok(Json(
        blocking(move || s.store.candidates(&id, q.operation.as_deref(), status)).await?,
    ))
}

#[derive(Deserialize, Default)]
struct ReviewBody {
    decisions: Vec<DecisionInput>,
}

async fn review(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: ReviewBody = parse(&body)?;
    Ok(Json(blocking(move || s.store.record_review(&id, &req.decisions)).await?))
}

async fn train(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: TrainRequest = parse(&body)?;
    Ok(Json(blocking(move || s.store.train(&id, &req)).await?))
}

#[derive(Deserialize, Default)]
struct ClassifyBody {
    text: String,
}

async fn classify(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, ServiceError> {
    let req: ClassifyBody = parse(&body)?;
    Ok(Json(blocking(move || s.store.classify(&id, &req.text)).await?))
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> Result<impl IntoResponse, ServiceError> {
    let format: ExportFormat = q.format.as_deref().unwrap_or("skill").parse()?;
    let (content_type, body) = blocking(move || s.store.export(&id, format)).await?;
    Ok(([(header::CONTENT_TYPE, content_type)], body))
}
