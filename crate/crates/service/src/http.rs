//! HTTP surface of the job service.
//!
//! | method | path | body / query |
//! |---|---|---|
//! | GET | `/health` | |
//! | GET | `/jobs` | |
//! | POST | `/jobs` | multipart (`video` file plus persona fields) or JSON `{path, role, ...}` |
//! | GET | `/jobs/{id}` | |
//! | POST | `/jobs/{id}/advance` | `?stage=extract_audio\|transcribe\|select\|merge`, defaults to the next stage |
//! | PATCH | `/jobs/{id}/cutlist` | `{"edits": [...]}` or a bare edit array |
//! | GET | `/jobs/{id}/artifacts/{kind}` | |
//! | GET | `/jobs/{id}/metrics` | `?tau=` |

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use clipsmith_core::persona::DEFAULT_MAX_DURATION;
use clipsmith_core::{parse_time_to_seconds, Persona, Timestamp};
use serde::Deserialize;
use serde_json::json;
use tower_http::cors::CorsLayer;

use crate::manifest::{ArtifactKind, Stage};
use crate::pipeline::{CutListEdit, JobSource, Pipeline};
use crate::ServiceError;

/// Default request body limit, sized for video uploads.
pub const DEFAULT_BODY_LIMIT: usize = 2 << 30;

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::NotReady(_) | ServiceError::InvalidTransition { .. } => StatusCode::CONFLICT,
            ServiceError::UnsupportedFormat(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            ServiceError::EditRejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::JobCreateFailed(_) | ServiceError::StageFailed { .. } | ServiceError::Storage(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::NotReady(_) => "not_ready",
            ServiceError::InvalidTransition { .. } => "invalid_transition",
            ServiceError::UnsupportedFormat(_) => "unsupported_format",
            ServiceError::JobCreateFailed(_) => "job_create_failed",
            ServiceError::EditRejected(_) => "edit_rejected",
            ServiceError::StageFailed { .. } => "stage_failed",
            ServiceError::Storage(_) => "storage",
            ServiceError::BadRequest(_) => "bad_request",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.code(), "message": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ServiceError>;

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Storage(format!("worker task failed: {e}")))?
}

/// Persona fields accepted on job creation.
#[derive(Debug, Default, Deserialize)]
struct PersonaFields {
    role: Option<String>,
    #[serde(default)]
    extra_requirements: String,
    #[serde(default)]
    keywords: Keywords,
    max_duration: Option<Timestamp>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
enum Keywords {
    #[default]
    None,
    List(Vec<String>),
    Csv(String),
}

fn split_keywords(csv: &str) -> impl Iterator<Item = String> + '_ {
    csv.split(',').map(str::trim).filter(|k| !k.is_empty()).map(String::from)
}

impl PersonaFields {
    fn into_persona(self) -> ApiResult<Persona> {
        let role = self
            .role
            .map(|r| r.trim().to_string())
            .filter(|r| !r.is_empty())
            .ok_or_else(|| ServiceError::BadRequest("persona role is required".into()))?;
        let keywords: Vec<String> = match self.keywords {
            Keywords::None => Vec::new(),
            Keywords::List(v) => v.into_iter().map(|k| k.trim().to_string()).filter(|k| !k.is_empty()).collect(),
            Keywords::Csv(s) => split_keywords(&s).collect(),
        };
        Ok(Persona::new(role, self.max_duration.unwrap_or(DEFAULT_MAX_DURATION))
            .with_requirements(self.extra_requirements)
            .with_keywords(keywords))
    }
}

#[derive(Debug, Deserialize)]
struct CreateFromPath {
    path: PathBuf,
    #[serde(flatten)]
    persona: PersonaFields,
}

async fn read_multipart(mut mp: Multipart) -> ApiResult<(JobSource, PersonaFields)> {
    let bad = |e: axum::extract::multipart::MultipartError| ServiceError::BadRequest(e.body_text());
    let mut fields = PersonaFields::default();
    let mut upload = None;
    let mut keywords = Vec::new();
    while let Some(field) = mp.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "video" | "file" => {
                let file_name = field.file_name().unwrap_or("upload").to_string();
                let bytes = field.bytes().await.map_err(bad)?.to_vec();
                upload = Some(JobSource::Upload { file_name, bytes });
            }
            "role" => fields.role = Some(field.text().await.map_err(bad)?),
            "extra_requirements" => fields.extra_requirements = field.text().await.map_err(bad)?,
            "keywords" => keywords.extend(split_keywords(&field.text().await.map_err(bad)?).collect::<Vec<_>>()),
            "max_duration" => {
                let raw = field.text().await.map_err(bad)?;
                let t = parse_time_to_seconds(raw.trim())
                    .map_err(|e| ServiceError::BadRequest(format!("max_duration {raw:?}: {e}")))?;
                fields.max_duration = Some(t);
            }
            other => tracing::debug!("ignoring multipart field {other:?}"),
        }
    }
    fields.keywords = Keywords::List(keywords);
    let source = upload.ok_or_else(|| ServiceError::BadRequest("multipart body has no video file field".into()))?;
    Ok((source, fields))
}

async fn create_job(State(p): State<Arc<Pipeline>>, req: Request) -> ApiResult<Response> {
    let content_type = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default()
        .to_ascii_lowercase();
    let (source, fields) = if content_type.starts_with("multipart/form-data") {
        let mp = Multipart::from_request(req, &()).await.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
        read_multipart(mp).await?
    } else {
        let Json(body) = Json::<CreateFromPath>::from_request(req, &())
            .await
            .map_err(|e| ServiceError::BadRequest(e.body_text()))?;
        (JobSource::Path(body.path), body.persona)
    };
    let persona = fields.into_persona()?;
    let m = blocking(move || p.create_job(source, persona)).await?;
    Ok((StatusCode::CREATED, Json(m)).into_response())
}

async fn list_jobs(State(p): State<Arc<Pipeline>>) -> ApiResult<Response> {
    let jobs = blocking(move || p.list()).await?;
    Ok(Json(jobs).into_response())
}

async fn get_job(State(p): State<Arc<Pipeline>>, Path(id): Path<String>) -> ApiResult<Response> {
    let m = blocking(move || p.get(&id)).await?;
    Ok(Json(m).into_response())
}

#[derive(Debug, Deserialize)]
struct AdvanceQuery {
    stage: Option<String>,
}

async fn advance(
    State(p): State<Arc<Pipeline>>,
    Path(id): Path<String>,
    Query(q): Query<AdvanceQuery>,
) -> ApiResult<Response> {
    let requested = q
        .stage
        .map(|s| s.parse::<Stage>().map_err(ServiceError::BadRequest))
        .transpose()?;
    let m = blocking(move || {
        let stage = match requested {
            Some(s) => s,
            None => {
                let m = p.get(&id)?;
                Stage::after(m.effective_state())
                    .ok_or_else(|| ServiceError::BadRequest(format!("job is {} and has no next stage", m.state)))?
            }
        };
        p.advance(&id, stage)
    })
    .await?;
    Ok(Json(m).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PatchBody {
    Wrapped { edits: Vec<CutListEdit> },
    Bare(Vec<CutListEdit>),
}

async fn patch_cutlist(
    State(p): State<Arc<Pipeline>>,
    Path(id): Path<String>,
    body: Result<Json<PatchBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Response> {
    let Json(body) = body.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let edits = match body {
        PatchBody::Wrapped { edits } | PatchBody::Bare(edits) => edits,
    };
    let m = blocking(move || p.patch_cutlist(&id, &edits)).await?;
    Ok(Json(m).into_response())
}

async fn get_artifact(
    State(p): State<Arc<Pipeline>>,
    Path((id, kind)): Path<(String, String)>,
) -> ApiResult<Response> {
    let kind: ArtifactKind = kind.parse().map_err(ServiceError::NotFound)?;
    let (path, mime) = blocking(move || p.artifact(&id, kind)).await?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
    let mut resp = bytes.into_response();
    resp.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static(mime));
    Ok(resp)
}

#[derive(Debug, Deserialize)]
struct MetricsQuery {
    tau: Option<f64>,
}

async fn metrics(
    State(p): State<Arc<Pipeline>>,
    Path(id): Path<String>,
    Query(q): Query<MetricsQuery>,
) -> ApiResult<Response> {
    let report = blocking(move || p.metrics(&id, q.tau)).await?;
    Ok(Json(report).into_response())
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

/// Routes with permissive CORS and [`DEFAULT_BODY_LIMIT`].
pub fn router(pipeline: Arc<Pipeline>) -> Router {
    router_with_limit(pipeline, DEFAULT_BODY_LIMIT)
}

pub fn router_with_limit(pipeline: Arc<Pipeline>, body_limit: usize) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/jobs", get(list_jobs).post(create_job))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/advance", post(advance))
        .route("/jobs/{id}/cutlist", patch(patch_cutlist))
        .route("/jobs/{id}/artifacts/{kind}", get(get_artifact))
        .route("/jobs/{id}/metrics", get(metrics))
        .layer(DefaultBodyLimit::max(body_limit))
        .layer(CorsLayer::permissive())
        .with_state(pipeline)
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, pipeline: Arc<Pipeline>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(pipeline))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
