use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::service::{AnnotateError, Service};

impl IntoResponse for AnnotateError {
    fn into_response(self) -> Response {
        let status = match &self {
            AnnotateError::UnknownEvent(_) | AnnotateError::UnknownCluster(_) => StatusCode::NOT_FOUND,
            AnnotateError::NoContext(_) | AnnotateError::InvalidLabel(_) => StatusCode::UNPROCESSABLE_ENTITY,
            AnnotateError::Stale { .. } => StatusCode::CONFLICT,
            AnnotateError::Unauthorized => StatusCode::UNAUTHORIZED,
            AnnotateError::Forbidden(_) => StatusCode::FORBIDDEN,
            AnnotateError::BadRequest(_) => StatusCode::BAD_REQUEST,
            AnnotateError::Roster(_) | AnnotateError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({"code": self.code(), "message": self.to_string()}))).into_response()
    }
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers.get(header::AUTHORIZATION)?.to_str().ok()?.strip_prefix("Bearer ").map(str::trim)
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: String,
}

#[derive(Deserialize)]
struct LabelBody {
    annotator: String,
    cluster_id: String,
    label: i64,
}

#[derive(Deserialize)]
struct ExportQuery {
    event: Option<String>,
}

/// Writes go through the blocking pool so fsync never stalls the runtime.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, AnnotateError> + Send + 'static,
) -> Result<T, AnnotateError> {
    tokio::task::spawn_blocking(f).await.unwrap_or_else(|e| Err(AnnotateError::Storage(e.to_string())))
}

async fn next(
    State(svc): State<Arc<Service>>,
    Path(event_id): Path<String>,
    q: Result<Query<NextQuery>, QueryRejection>,
    headers: HeaderMap,
) -> Result<Response, AnnotateError> {
    let Query(q) = q.map_err(|e| AnnotateError::BadRequest(e.body_text()))?;
    Ok(Json(svc.open_event(bearer(&headers), &q.annotator, &event_id)?).into_response())
}

async fn label(
    State(svc): State<Arc<Service>>,
    headers: HeaderMap,
    body: Result<Json<LabelBody>, JsonRejection>,
) -> Result<Response, AnnotateError> {
    let Json(body) = body.map_err(|e| AnnotateError::BadRequest(e.body_text()))?;
    let token = bearer(&headers).map(str::to_string);
    let resp = blocking(move || svc.submit(token.as_deref(), &body.annotator, &body.cluster_id, body.label)).await?;
    Ok(Json(resp).into_response())
}

async fn export(
    State(svc): State<Arc<Service>>,
    q: Result<Query<ExportQuery>, QueryRejection>,
    headers: HeaderMap,
) -> Result<Response, AnnotateError> {
    let Query(q) = q.map_err(|e| AnnotateError::BadRequest(e.body_text()))?;
    let records = svc.export(bearer(&headers), q.event.as_deref())?;
    let body: String = records.iter().map(|r| serde_json::to_string(r).expect("vote serializes") + "\n").collect();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/events/{id}/next", get(next))
        .route("/labels", post(label))
        .route("/export", get(export))
        .with_state(service)
}

/// Serves until the listener fails or the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener, service: Arc<Service>) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "annotation service listening");
    axum::serve(listener, router(service)).await
}
