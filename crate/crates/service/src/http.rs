//! Axum routes over [`App`]. Handlers run on the blocking pool because the
//! store and the LLM client do synchronous I/O.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::Serialize;

use crate::app::{ApiError, App, AskRequest, EditRequest, PlanRequest, ProgressRequest, RecommendRequest, TranscriptRequest};
use crate::schemas;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        (status, Json(self.body())).into_response()
    }
}

type Shared = State<Arc<App>>;

async fn blocking<T, F>(app: Arc<App>, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&App) -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&app))
        .await
        .map_err(|e| ApiError::Internal(format!("handler panicked: {e}")))?
}

/// Turns extractor failures into the standard 400 error body.
fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::BadRequest(e.body_text()))
}

fn ok<T: Serialize>(value: T) -> Response {
    Json(value).into_response()
}

async fn recommend(State(app): Shared, payload: Result<Json<RecommendRequest>, JsonRejection>) -> Result<Response, ApiError> {
    let req = body(payload)?;
    blocking(app, move |a| a.recommend(&req)).await.map(ok)
}

async fn topics(State(app): Shared) -> Result<Response, ApiError> {
    blocking(app, |a| Ok(a.topics())).await.map(ok)
}

async fn syllabus(State(app): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    blocking(app, move |a| a.syllabus(&id)).await.map(ok)
}

async fn create_plan(State(app): Shared, payload: Result<Json<PlanRequest>, JsonRejection>) -> Result<Response, ApiError> {
    let req = body(payload)?;
    let view = blocking(app, move |a| a.create_plan(&req)).await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_plan(State(app): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    blocking(app, move |a| a.get_plan(&id)).await.map(ok)
}

async fn edit_plan(
    State(app): Shared,
    Path(id): Path<String>,
    payload: Result<Json<EditRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let req = body(payload)?;
    blocking(app, move |a| a.edit_plan(&id, &req)).await.map(ok)
}

async fn ical(State(app): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let text = blocking(app, move |a| a.ical(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "text/calendar; charset=utf-8")], text).into_response())
}

async fn get_progress(State(app): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    blocking(app, move |a| a.progress(&id)).await.map(ok)
}

async fn post_progress(State(app): Shared, payload: Result<Json<ProgressRequest>, JsonRejection>) -> Result<Response, ApiError> {
    let req = body(payload)?;
    blocking(app, move |a| a.complete_session(&req)).await.map(ok)
}

async fn ask(State(app): Shared, payload: Result<Json<AskRequest>, JsonRejection>) -> Result<Response, ApiError> {
    let req = body(payload)?;
    blocking(app, move |a| a.ask(&req)).await.map(ok)
}

async fn ingest(State(app): Shared, payload: Result<Json<TranscriptRequest>, JsonRejection>) -> Result<Response, ApiError> {
    let req = body(payload)?;
    blocking(app, move |a| a.ingest(&req)).await.map(ok)
}

fn json_text(text: &'static str) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn openapi() -> Response {
    json_text(schemas::OPENAPI)
}

async fn schema(Path(name): Path<String>) -> Result<Response, ApiError> {
    schemas::get(&name)
        .map(json_text)
        .ok_or_else(|| ApiError::NotFound(format!("no schema {name:?}")))
}

async fn health() -> Response {
    ok(serde_json::json!({ "status": "ok" }))
}

async fn fallback() -> ApiError {
    ApiError::NotFound("no such route".into())
}

pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/courses/recommend", post(recommend))
        .route("/courses/topics", get(topics))
        .route("/courses/{id}/syllabus", get(syllabus))
        .route("/plans", post(create_plan))
        .route("/plans/{id}", get(get_plan))
        .route("/plans/{id}/events", patch(edit_plan))
        .route("/plans/{id}/ical", get(ical))
        .route("/plans/{id}/progress", get(get_progress))
        .route("/progress", post(post_progress))
        .route("/tutor/ask", post(ask))
        .route("/transcripts", post(ingest))
        .route("/openapi.json", get(openapi))
        .route("/schemas/{name}", get(schema))
        .route("/health", get(health))
        .fallback(fallback)
        .with_state(app)
}

/// Serves until ctrl-c. `on_bound` receives the actual listening address.
pub async fn serve(app: Arc<App>, bind: &str, on_bound: impl FnOnce(std::net::SocketAddr)) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
