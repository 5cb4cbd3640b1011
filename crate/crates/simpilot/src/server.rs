//! HTTP/JSON front end over [`Engine`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use simpilot_core::pipeline::{Engine, ExerciseConfig, PipelineError, SessionRecord};

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    /// Used when `POST /sessions` has an empty body.
    pub default_config: Option<ExerciseConfig>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    detail: String,
}

impl ApiError {
    fn bad_request(detail: impl ToString) -> Self {
        Self { status: StatusCode::BAD_REQUEST, code: "bad_request", detail: detail.to_string() }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = match &e {
            PipelineError::UnknownSession(_) => StatusCode::NOT_FOUND,
            PipelineError::Config(_) | PipelineError::Parse(_) | PipelineError::Resolve(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            PipelineError::MalformedRecord { .. } | PipelineError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self { status, code: e.code(), detail: e.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "detail": self.detail }))).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StepRequest {
    pub atco_text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionLog {
    pub session_id: String,
    pub records: Vec<SessionRecord>,
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, PipelineError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            detail: e.to_string(),
        }),
    }
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "active_sessions": state.engine.active_sessions().len() }))
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let text = std::str::from_utf8(&body).map_err(ApiError::bad_request)?;
    let config = if text.trim().is_empty() {
        state
            .default_config
            .clone()
            .ok_or_else(|| ApiError::bad_request("empty body and no server default exercise"))?
    } else {
        ExerciseConfig::parse(text).map_err(|e| ApiError::from(PipelineError::from(e)))?
    };
    let engine = Arc::clone(&state.engine);
    let id = blocking(move || engine.start_session(config)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id }))))
}

async fn step(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let request: StepRequest = serde_json::from_slice(&body).map_err(ApiError::bad_request)?;
    let engine = Arc::clone(&state.engine);
    let response = blocking(move || engine.step(&id, &request.atco_text)).await?;
    Ok(Json(response))
}

async fn session_log(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let engine = Arc::clone(&state.engine);
    let records = blocking({
        let id = id.clone();
        move || engine.records(&id)
    })
    .await?;
    Ok(Json(SessionLog { session_id: id, records }))
}

async fn end_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let engine = Arc::clone(&state.engine);
    let summary = blocking(move || engine.end_session(&id)).await?;
    Ok(Json(summary))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/log", get(session_log))
        .route("/sessions/{id}", axum::routing::delete(end_session))
        .with_state(state)
}
