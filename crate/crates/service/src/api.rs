//! JSON-over-HTTP routes.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use sleec_core::explain::Suggestion;
use tower_http::services::ServeDir;

use crate::service::{Service, ServiceError, Submission};

type App = State<Arc<Service>>;

#[derive(Debug, Deserialize)]
struct RulesetBody {
    #[serde(default)]
    text: String,
}

#[derive(Debug, Deserialize)]
struct ExplainBody {
    revision: usize,
    verdict: usize,
    #[serde(default)]
    system_description: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ApplyBody {
    #[serde(default)]
    revision: Option<usize>,
    #[serde(flatten)]
    suggestion: Suggestion,
}

pub struct ApiError {
    status: StatusCode,
    category: &'static str,
    message: String,
    detail: serde_json::Value,
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let category = e.category();
        let status = match category {
            "not_found" => StatusCode::NOT_FOUND,
            "provider" | "format" => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let detail = match &e {
            ServiceError::Explain(x) => serde_json::to_value(x).unwrap_or_default(),
            _ => serde_json::Value::Null,
        };
        ApiError {
            status,
            category,
            message: e.to_string(),
            detail,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            category: "request",
            message: e.body_text(),
            detail: serde_json::Value::Null,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(category = self.category, "{}", self.message);
        }
        let body = json!({"error": {"category": self.category, "message": self.message, "detail": self.detail}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// The API under `/api`, plus static assets from `static_dir` (or a short
/// built-in page) under `/`.
pub fn router(service: Arc<Service>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}", get(session))
        .route("/api/sessions/{id}/ruleset", post(submit))
        .route("/api/sessions/{id}/explain", post(explain))
        .route("/api/sessions/{id}/apply", post(apply))
        .route("/api/sessions/{id}/metrics", get(metrics))
        .with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX) })),
    }
}

const INDEX: &str = "<!doctype html><title>SLEEC workbench</title>
<h1>SLEEC workbench</h1>
<p>The API is served under <code>/api</code>. Set <code>SLEEC_STATIC_DIR</code> to serve a front end here.</p>
";

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

async fn create(State(svc): App) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let id = svc.create_session()?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

async fn session(State(svc): App, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(svc.session(&id).await?).into_response())
}

async fn metrics(State(svc): App, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(svc.metrics(&id).await?).into_response())
}

/// Rejections come back as 422 with their diagnostics.
fn submission(s: Submission) -> Response {
    let status = if s.revision.is_some() {
        StatusCode::OK
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    (status, Json(s)).into_response()
}

async fn submit(
    State(svc): App,
    Path(id): Path<String>,
    body: Result<Json<RulesetBody>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body?;
    Ok(submission(svc.submit_ruleset(&id, body.text).await?))
}

async fn apply(
    State(svc): App,
    Path(id): Path<String>,
    body: Result<Json<ApplyBody>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body?;
    Ok(submission(svc.apply_suggestion(&id, body.revision, body.suggestion).await?))
}

async fn explain(
    State(svc): App,
    Path(id): Path<String>,
    body: Result<Json<ExplainBody>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body?;
    let record = svc
        .request_explanation(&id, body.revision, body.verdict, body.system_description)
        .await?;
    let mut resp = Json(&record.report).into_response();
    let headers = resp.headers_mut();
    if let Ok(h) = HeaderValue::from_str(&record.prompt_hash) {
        headers.insert("x-prompt-hash", h);
    }
    headers.insert("x-cache", HeaderValue::from_static(if record.cached { "hit" } else { "miss" }));
    Ok(resp)
}
