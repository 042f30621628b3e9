//! HTTP/1.1 JSON service over a [`Store`].

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, PathRejection};
use axum::extract::{DefaultBodyLimit, Path, RawQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tlx_core::{
    CohortKey, Dimension, DimensionPair, ScoringError, UserProfile, Variant, WeightingMode,
    DEFAULT_FOCUS_THRESHOLD_MS,
};
use tokio::net::TcpListener;

use crate::docs::{RawChoice, RawRatings, ScoreDocument};
use crate::report::{render_report, ReportFormat};
use crate::store::{Session, Store, StoreError, Study};

const BODY_LIMIT: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Validation,
    NotFound,
    Conflict,
    State,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::Validation => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict | ErrorCode::State => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// A field- or line-level diagnostic attached to a validation error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detail {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Vec<Detail>>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            details: None,
        }
    }

    fn with_details(mut self, details: Vec<Detail>) -> Self {
        if !details.is_empty() {
            self.details = Some(details);
        }
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.code == ErrorCode::Internal {
            tracing::error!(message = %self.message, "internal error");
        }
        (self.code.status(), Json(self)).into_response()
    }
}

fn message_details<I: IntoIterator<Item = T>, T: ToString>(items: I) -> Vec<Detail> {
    items
        .into_iter()
        .map(|i| Detail {
            line: None,
            field: None,
            message: i.to_string(),
        })
        .collect()
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::Scoring(ScoringError::InvalidChoices(issues)) => {
                ApiError::new(ErrorCode::Validation, message).with_details(message_details(&issues.0))
            }
            StoreError::Scoring(ScoringError::InvalidRatings(issues)) => {
                ApiError::new(ErrorCode::Validation, message).with_details(message_details(&issues.0))
            }
            StoreError::Scoring(_) | StoreError::Validation(_) => ApiError::new(ErrorCode::Validation, message),
            StoreError::Events(batch) => ApiError::new(ErrorCode::Validation, "invalid event batch").with_details(
                batch
                    .lines
                    .iter()
                    .map(|(n, err)| Detail {
                        line: Some(*n),
                        field: err.field().map(str::to_owned),
                        message: err.to_string(),
                    })
                    .collect(),
            ),
            StoreError::NotFound { .. } | StoreError::NoEvents => ApiError::new(ErrorCode::NotFound, message),
            StoreError::State { .. } => ApiError::new(ErrorCode::State, message),
            StoreError::Conflict(_) => ApiError::new(ErrorCode::Conflict, message),
            StoreError::Io { .. } | StoreError::Corrupt { .. } => ApiError::new(ErrorCode::Internal, message),
        }
    }
}

impl From<PathRejection> for ApiError {
    fn from(e: PathRejection) -> Self {
        ApiError::new(ErrorCode::Validation, e.body_text())
    }
}

impl From<BytesRejection> for ApiError {
    fn from(e: BytesRejection) -> Self {
        ApiError::new(ErrorCode::Validation, e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(ErrorCode::Validation, format!("invalid JSON body: {e}")))
}

fn parse_query<T: DeserializeOwned>(query: Option<String>) -> ApiResult<T> {
    serde_urlencoded::from_str(query.as_deref().unwrap_or(""))
        .map_err(|e| ApiError::new(ErrorCode::Validation, format!("invalid query: {e}")))
}

/// Runs a blocking store operation off the async executor.
async fn blocking<T, F>(store: &Arc<Store>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Store) -> Result<T, StoreError> + Send + 'static,
{
    let store = store.clone();
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, format!("worker failed: {e}")))?
        .map_err(ApiError::from)
}

type AppState = Arc<Store>;

#[derive(Debug, Clone, Serialize)]
pub struct StudyView {
    #[serde(flatten)]
    pub study: Study,
    pub dimensions: Vec<Dimension>,
}

impl From<Study> for StudyView {
    fn from(study: Study) -> Self {
        StudyView {
            dimensions: study.dimensions(),
            study,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateStudy {
    name: String,
    dimension_set: Variant,
    #[serde(default)]
    weighting_mode: Option<WeightingMode>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    user_id: String,
    profile: UserProfile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoicesBody {
    choices: Vec<RawChoice>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RatingsBody {
    ratings: RawRatings,
}

#[derive(Serialize)]
struct RatingsResponse {
    session: Session,
    score: ScoreDocument,
}

#[derive(Serialize)]
struct PairsResponse {
    session_id: String,
    count: usize,
    pairs: Vec<DimensionPair>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairsQuery {
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsQuery {
    threshold_ms: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportQuery {
    group_by: Option<String>,
    format: Option<String>,
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

async fn create_study(State(store): State<AppState>, body: Result<Bytes, BytesRejection>) -> ApiResult<impl IntoResponse> {
    let req: CreateStudy = parse_json(&body?)?;
    let mode = req
        .weighting_mode
        .unwrap_or_else(|| WeightingMode::default_for(req.dimension_set));
    let study = blocking(&store, move |s| s.create_study(&req.name, req.dimension_set, mode)).await?;
    Ok((StatusCode::CREATED, Json(StudyView::from(study))))
}

async fn get_study(State(store): State<AppState>, id: Result<Path<String>, PathRejection>) -> ApiResult<Json<StudyView>> {
    let Path(id) = id?;
    let study = blocking(&store, move |s| s.study(&id)).await?;
    Ok(Json(study.into()))
}

async fn create_session(
    State(store): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<impl IntoResponse> {
    let Path(id) = id?;
    let req: CreateSession = parse_json(&body?)?;
    let session = blocking(&store, move |s| s.create_session(&id, &req.user_id, req.profile)).await?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(State(store): State<AppState>, id: Result<Path<String>, PathRejection>) -> ApiResult<Json<Session>> {
    let Path(id) = id?;
    Ok(Json(blocking(&store, move |s| s.session(&id)).await?))
}

async fn get_pairs(
    State(store): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    RawQuery(query): RawQuery,
) -> ApiResult<Json<PairsResponse>> {
    let Path(id) = id?;
    let q: PairsQuery = parse_query(query)?;
    let session_id = id.clone();
    let pairs = blocking(&store, move |s| s.pairs(&id, q.seed)).await?;
    Ok(Json(PairsResponse {
        session_id,
        count: pairs.len(),
        pairs,
    }))
}

async fn post_choices(
    State(store): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<Session>> {
    let Path(id) = id?;
    let req: ChoicesBody = parse_json(&body?)?;
    Ok(Json(blocking(&store, move |s| s.record_choices(&id, &req.choices)).await?))
}

async fn post_ratings(
    State(store): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<RatingsResponse>> {
    let Path(id) = id?;
    let req: RatingsBody = parse_json(&body?)?;
    let (session, score) = blocking(&store, move |s| s.submit_ratings(&id, &req.ratings)).await?;
    Ok(Json(RatingsResponse { session, score }))
}

async fn get_score(State(store): State<AppState>, id: Result<Path<String>, PathRejection>) -> ApiResult<Json<ScoreDocument>> {
    let Path(id) = id?;
    Ok(Json(blocking(&store, move |s| s.score(&id)).await?))
}

async fn post_events(
    State(store): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<impl IntoResponse> {
    let Path(id) = id?;
    let body = body?;
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(ErrorCode::Validation, format!("event batch is not UTF-8: {e}")))?
        .to_owned();
    Ok(Json(blocking(&store, move |s| s.ingest_lines(&id, &text)).await?))
}

async fn get_metrics(
    State(store): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    RawQuery(query): RawQuery,
) -> ApiResult<impl IntoResponse> {
    let Path(id) = id?;
    let q: MetricsQuery = parse_query(query)?;
    let threshold = q.threshold_ms.unwrap_or(DEFAULT_FOCUS_THRESHOLD_MS);
    Ok(Json(blocking(&store, move |s| s.session_metrics(&id, threshold)).await?))
}

async fn get_report(
    State(store): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    RawQuery(query): RawQuery,
) -> ApiResult<Response> {
    let Path(id) = id?;
    let q: ReportQuery = parse_query(query)?;
    let key = q
        .group_by
        .as_deref()
        .map(str::parse::<CohortKey>)
        .transpose()
        .map_err(|e| ApiError::new(ErrorCode::Validation, e.to_string()))?;
    let format = q
        .format
        .as_deref()
        .map(str::parse::<ReportFormat>)
        .transpose()
        .map_err(|e| ApiError::new(ErrorCode::Validation, e))?
        .unwrap_or_default();
    let rows = blocking(&store, move |s| {
        s.study(&id)?;
        s.report_rows(Some(&id), DEFAULT_FOCUS_THRESHOLD_MS)
    })
    .await?;
    let body = render_report(rows, key, format);
    Ok(([(header::CONTENT_TYPE, format.content_type())], body).into_response())
}

async fn not_found() -> ApiError {
    ApiError::new(ErrorCode::NotFound, "no such endpoint")
}

async fn method_not_allowed() -> Response {
    let mut resp = ApiError::new(ErrorCode::Validation, "method not allowed").into_response();
    *resp.status_mut() = StatusCode::METHOD_NOT_ALLOWED;
    resp
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/studies", post(create_study))
        .route("/v1/studies/{id}", get(get_study))
        .route("/v1/studies/{id}/sessions", post(create_session))
        .route("/v1/studies/{id}/report", get(get_report))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/pairs", get(get_pairs))
        .route("/v1/sessions/{id}/choices", post(post_choices))
        .route("/v1/sessions/{id}/ratings", post(post_ratings))
        .route("/v1/sessions/{id}/score", get(get_score))
        .route("/v1/sessions/{id}/events", post(post_events))
        .route("/v1/sessions/{id}/metrics", get(get_metrics))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(store)
}

/// Serves on an already-bound listener until `shutdown` resolves. In-flight
/// requests are allowed to finish.
pub async fn serve_on(
    listener: TcpListener,
    store: Arc<Store>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(shutdown)
        .await
}

pub async fn bind(addr: &str) -> std::io::Result<(TcpListener, SocketAddr)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((listener, local))
}

/// Resolves on ctrl-c or, on unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutting down");
}
