//! JSON-over-HTTP session API.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use inkgram::ink::Point;
use inkgram::session::{Lock, SessionManager};
use inkgram::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

/// Error body: `{"error": "<code>", "message": "..."}`.
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownSession(_) | Error::UnknownModel(_) | Error::UnknownStroke(_) => StatusCode::NOT_FOUND,
            Error::StaleAlternates { .. } => StatusCode::CONFLICT,
            Error::InkParse { .. } | Error::EmptySubset | Error::TooManyStrokes(_) => StatusCode::BAD_REQUEST,
            Error::Io { .. } | Error::Json(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError { status, code: e.code(), message: e.to_string() }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, code: "bad-request", message: e.body_text() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;
type Shared = Arc<SessionManager>;

#[derive(Deserialize, Default)]
pub struct CreateSession {
    model: Option<String>,
}

#[derive(Deserialize)]
pub struct AddStroke {
    points: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
pub struct AlternatesRequest {
    strokes: Vec<u64>,
    k: Option<usize>,
}

#[derive(Deserialize)]
pub struct LockRequest {
    revision: u64,
    strokes: Vec<u64>,
    index: usize,
}

#[derive(Serialize)]
pub struct SessionState {
    session: u64,
    revision: u64,
    strokes: Vec<u64>,
    tree: Option<inkgram::recognize::TreeSummary>,
    locks: Vec<Lock>,
}

/// Runs session work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Error> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.expect("session task panicked").map_err(ApiError::from)
}

async fn models(State(m): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({ "models": m.model_names() }))
}

async fn create(
    State(m): State<Shared>,
    body: Option<Json<CreateSession>>,
) -> Result<(StatusCode, Json<SessionState>), ApiError> {
    let req = body.map(|b| b.0).unwrap_or_default();
    let name = match req.model {
        Some(n) => n,
        None => m.model_names().into_iter().next().ok_or_else(|| Error::UnknownModel(String::new()))?,
    };
    let id = m.create(&name)?;
    let state = m.with(id, |s| Ok(state_of(s)))?;
    Ok((StatusCode::CREATED, Json(state)))
}

fn state_of(s: &mut inkgram::session::Session) -> SessionState {
    SessionState {
        session: s.id(),
        revision: s.revision(),
        strokes: s.stroke_ids(),
        tree: s.tree(),
        locks: s.locks().to_vec(),
    }
}

async fn remove(State(m): State<Shared>, Path(id): Path<u64>) -> Result<StatusCode, ApiError> {
    m.delete(id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_tree(State(m): State<Shared>, Path(id): Path<u64>) -> ApiResult<SessionState> {
    Ok(Json(blocking(move || m.with(id, |s| Ok(state_of(s)))).await?))
}

async fn add_stroke(
    State(m): State<Shared>,
    Path(id): Path<u64>,
    body: Result<Json<AddStroke>, JsonRejection>,
) -> ApiResult<inkgram::session::Update> {
    let points = body?.0.points.into_iter().map(|[x, y]| Point::new(x, y)).collect();
    Ok(Json(blocking(move || m.with(id, |s| s.add_stroke(points))).await?))
}

async fn remove_stroke(
    State(m): State<Shared>,
    Path((id, stroke)): Path<(u64, u64)>,
) -> ApiResult<inkgram::session::Update> {
    Ok(Json(blocking(move || m.with(id, |s| s.remove_stroke(stroke))).await?))
}

async fn alternates(
    State(m): State<Shared>,
    Path(id): Path<u64>,
    body: Result<Json<AlternatesRequest>, JsonRejection>,
) -> ApiResult<inkgram::session::Alternates> {
    let req = body?.0;
    Ok(Json(
        blocking(move || {
            m.with(id, |s| {
                let k = req.k.unwrap_or(s.default_k());
                s.alternates(&req.strokes, k)
            })
        })
        .await?,
    ))
}

async fn lock(
    State(m): State<Shared>,
    Path(id): Path<u64>,
    body: Result<Json<LockRequest>, JsonRejection>,
) -> ApiResult<inkgram::session::Update> {
    let req = body?.0;
    Ok(Json(blocking(move || m.with(id, |s| s.lock_choice(req.revision, &req.strokes, req.index))).await?))
}

/// The API router, optionally serving a static UI bundle at `/`.
pub fn router(manager: Arc<SessionManager>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/models", get(models))
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}", get(get_tree).delete(remove))
        .route("/api/sessions/{id}/strokes", post(add_stroke))
        .route("/api/sessions/{id}/strokes/{stroke}", delete(remove_stroke))
        .route("/api/sessions/{id}/alternates", post(alternates))
        .route("/api/sessions/{id}/lock", post(lock))
        .with_state(manager);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
