//! HTTP API under `/api/v1`.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use nexus_core::annotations::{Body, Decision};
use nexus_core::archival::PartialDate;
use nexus_core::guide::{self, DEFAULT_COPY_THRESHOLD};
use nexus_core::ingest::MappingProfile;
use nexus_core::portal::{Portal, PortalError};
use nexus_core::search::Filters;

#[derive(Clone)]
pub struct AppState {
    pub portal: Arc<Portal>,
    pub page_size_default: usize,
    pub page_size_max: usize,
}

/// Structured error body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status: status.as_u16(), code: code.into(), message: message.into(), details: json!({}) }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }
}

/// HTTP status for a stable error code.
pub fn status_for(code: &str) -> StatusCode {
    match code {
        "unknown-unit" | "unknown-repository" | "unknown-guide" | "unknown-annotation" | "unknown-person" | "unknown-target" | "unknown-id" | "unknown-assertion"
        | "unknown-route" => StatusCode::NOT_FOUND,
        "already-moderated" | "cycle-detected" | "partOf-cycle" | "partOf-second-parent" | "kind-conflict" | "identical-ids" => StatusCode::CONFLICT,
        "network-failure" | "protocol-error" | "bad-resumption-token" => StatusCode::BAD_GATEWAY,
        "kb-not-built" => StatusCode::SERVICE_UNAVAILABLE,
        "io-failure" | "internal" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<PortalError> for ApiError {
    fn from(e: PortalError) -> Self {
        let code = e.code();
        Self::new(status_for(code), code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::bad_request("malformed-input", e.body_text()))
}

/// Mutation responses carry the graph version they produced.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct Versioned<T: Serialize> {
    graph_version: u64,
    #[serde(flatten)]
    data: T,
}

fn versioned<T: Serialize>(portal: &Portal, data: T) -> Json<Versioned<T>> {
    Json(Versioned { graph_version: portal.state().graph.version(), data })
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, PortalError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

pub fn router(state: AppState) -> Router {
    let v1 = Router::new()
        .route("/health", get(health))
        .route("/repositories", get(repositories))
        .route("/repositories/{id}", get(repository))
        .route("/units/{*id}", get(unit))
        .route("/search", get(search))
        .route("/ingest", post(ingest))
        .route("/annotations", post(annotate))
        .route("/annotations/{id}/moderate", post(moderate))
        .route("/helpdesk/ask", post(ask))
        .route("/guide/{id}", get(guide_view))
        .route("/guide/{id}/map", get(guide_map))
        .route("/guide/{id}/timeline", get(guide_timeline))
        .route("/guide/{id}/persons/{pid}", get(guide_person))
        .route("/guide/{id}/copies/suggest", post(suggest_copies))
        .route("/guide/{id}/copies/confirm", post(confirm_copies));
    Router::new()
        .nest("/api/v1", v1)
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "unknown-route", "no such endpoint") })
        .with_state(state)
}

async fn health(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.portal.state().health())
}

async fn repositories(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.portal.state().repositories())
}

async fn repository(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.portal.state().repository(&id)?))
}

async fn unit(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.portal.state().unit_view(&id)?))
}

fn split_list(values: &[&String]) -> Vec<String> {
    values.iter().flat_map(|v| v.split(',')).map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect()
}

fn usize_param(params: &[(String, String)], name: &str, default: usize) -> ApiResult<usize> {
    match params.iter().rev().find(|(k, _)| k == name) {
        None => Ok(default),
        Some((_, v)) => v.parse().map_err(|_| ApiError::bad_request("invalid-page", format!("`{name}` must be a positive integer, got `{v}`"))),
    }
}

async fn search(State(s): State<AppState>, Query(params): Query<Vec<(String, String)>>) -> ApiResult<impl IntoResponse> {
    let all = |name: &str| params.iter().filter(|(k, _)| k == name).map(|(_, v)| v).collect::<Vec<_>>();
    let q = all("q").into_iter().last().cloned().unwrap_or_default();
    if q.trim().is_empty() {
        return Err(ApiError::bad_request("missing-parameter", "`q` is required"));
    }
    let languages = split_list(&all("lang"));
    let mut filters = Filters::new();
    for pair in split_list(&[all("facets"), all("facet")].concat()) {
        let (k, v) = pair
            .split_once(':')
            .ok_or_else(|| ApiError::bad_request("invalid-facet", format!("facet `{pair}` is not name:value")))?;
        filters.insert(k.to_string(), v.to_string());
    }
    let page = usize_param(&params, "page", 1)?;
    let size = usize_param(&params, "size", s.page_size_default)?;
    if size == 0 || size > s.page_size_max {
        return Err(ApiError::bad_request("invalid-page", format!("size must be between 1 and {}", s.page_size_max))
            .with_details(json!({"pageSizeMax": s.page_size_max})));
    }
    let state = s.portal.state();
    let result = state.search(&q, &languages, &filters, page, size)?;
    Ok(Json(Versioned { graph_version: state.graph.version(), data: result }))
}

async fn ingest(State(s): State<AppState>, mut form: Multipart) -> ApiResult<impl IntoResponse> {
    let mut fields: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    while let Some(field) = form.next_field().await.map_err(|e| ApiError::bad_request("malformed-input", e.body_text()))? {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field.bytes().await.map_err(|e| ApiError::bad_request("malformed-input", e.body_text()))?;
        fields.insert(name, bytes.to_vec());
    }
    let text = |name: &str| -> ApiResult<String> {
        let raw = fields.get(name).ok_or_else(|| ApiError::bad_request("missing-parameter", format!("multipart field `{name}` is required")))?;
        String::from_utf8(raw.clone()).map_err(|_| ApiError::bad_request("malformed-input", format!("field `{name}` is not UTF-8")))
    };
    let profile = MappingProfile::parse(&text("profile")?).map_err(PortalError::from)?;
    let repository = text("repository")?;
    let data = fields.remove("data").ok_or_else(|| ApiError::bad_request("missing-parameter", "multipart field `data` is required"))?;
    let portal = s.portal.clone();
    let report = blocking(move || portal.ingest(&data, &profile, &repository)).await?;
    Ok(versioned(&s.portal, report))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct NewAnnotation {
    target_id: String,
    body: Body,
    author: String,
}

async fn annotate(State(s): State<AppState>, payload: Result<Json<NewAnnotation>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let req = body(payload)?;
    let portal = s.portal.clone();
    let created = blocking(move || portal.annotate(&req.target_id, req.body, &req.author)).await?;
    Ok((StatusCode::CREATED, versioned(&s.portal, created)))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Moderation {
    decision: Decision,
    moderator: String,
    #[serde(default)]
    note: Option<String>,
}

async fn moderate(
    State(s): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<Moderation>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let req = body(payload)?;
    let portal = s.portal.clone();
    let updated = blocking(move || portal.moderate(&id, req.decision, &req.moderator, req.note.as_deref())).await?;
    Ok(versioned(&s.portal, updated))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Question {
    question: String,
    #[serde(default)]
    languages: Vec<String>,
}

async fn ask(State(s): State<AppState>, payload: Result<Json<Question>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let req = body(payload)?;
    Ok(Json(s.portal.state().ask(&req.question, &req.languages)?))
}

async fn guide_view(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(s.portal.state().guide(&id)?.clone()))
}

async fn guide_map(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let state = s.portal.state();
    Ok(Json(guide::map_features(state.guide(&id)?, &state.graph)))
}

#[derive(Debug, Deserialize)]
struct Range {
    from: Option<String>,
    to: Option<String>,
}

fn date_param(value: Option<&str>, fallback: &str) -> ApiResult<PartialDate> {
    let raw = value.unwrap_or(fallback);
    raw.parse().map_err(|e| ApiError::bad_request("invalid-range", format!("`{raw}`: {e}")))
}

async fn guide_timeline(State(s): State<AppState>, Path(id): Path<String>, Query(range): Query<Range>) -> ApiResult<impl IntoResponse> {
    let state = s.portal.state();
    let g = state.guide(&id)?;
    let from = date_param(range.from.as_deref(), "0001")?;
    let to = date_param(range.to.as_deref(), "9999")?;
    Ok(Json(guide::timeline_query(g, from, to).map_err(PortalError::from)?))
}

async fn guide_person(State(s): State<AppState>, Path((id, pid)): Path<(String, String)>) -> ApiResult<impl IntoResponse> {
    let state = s.portal.state();
    Ok(Json(guide::biography(state.guide(&id)?, &state.graph, &pid).map_err(PortalError::from)?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SuggestRequest {
    #[serde(default)]
    threshold: Option<f64>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct CopyList {
    copies: Vec<guide::CopyAssertion>,
}

async fn suggest_copies(
    State(s): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<SuggestRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let req = body(payload)?;
    let portal = s.portal.clone();
    let copies = blocking(move || portal.suggest_copies(&id, req.threshold.unwrap_or(DEFAULT_COPY_THRESHOLD))).await?;
    Ok(versioned(&s.portal, CopyList { copies }))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ConfirmRequest {
    source: String,
    #[serde(default)]
    all: bool,
    #[serde(default)]
    unit_a: Option<String>,
    #[serde(default)]
    unit_b: Option<String>,
}

async fn confirm_copies(
    State(s): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<ConfirmRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let req = body(payload)?;
    let pair = match (req.all, req.unit_a, req.unit_b) {
        (true, None, None) => None,
        (false, Some(a), Some(b)) => Some((a, b)),
        _ => return Err(ApiError::bad_request("malformed-input", "give either `all: true` or both `unitA` and `unitB`")),
    };
    let portal = s.portal.clone();
    let copies = blocking(move || match pair {
        None => portal.confirm_all(&id, &req.source),
        Some((a, b)) => portal.confirm_copy(&id, &a, &b, &req.source).map(|c| vec![c]),
    })
    .await?;
    Ok(versioned(&s.portal, CopyList { copies }))
}
