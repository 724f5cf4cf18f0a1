//! Read-only JSON API over a loaded index.
//!
//! `GET /api/health`, `GET /api/search?q=&k=&min_similarity=&offset=&limit=`
//! and `GET /api/entity/{class_id}`. Errors carry `{error, detail}` with
//! status 400 for bad parameters and 404 for unknown classes or routes.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use relsearch_core::search::{SearchOptions, DEFAULT_EVIDENCE_LIMIT};
use relsearch_core::SearchEngine;
use serde::Serialize;
use serde_json::json;
use tower_http::services::ServeDir;

pub const MAX_K: usize = 50;
pub const MAX_EVIDENCE_LIMIT: usize = 100;

#[derive(Clone)]
struct AppState {
    engine: Arc<SearchEngine>,
    min_similarity: f64,
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    pub error: &'static str,
    pub detail: String,
    #[serde(skip)]
    status: StatusCode,
}

impl ApiError {
    fn bad_request(error: &'static str, detail: impl Into<String>) -> Self {
        ApiError { error, detail: detail.into(), status: StatusCode::BAD_REQUEST }
    }

    fn not_found(error: &'static str, detail: impl Into<String>) -> Self {
        ApiError { error, detail: detail.into(), status: StatusCode::NOT_FOUND }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

/// Builds the router. `min_similarity` is the default τ when a request does
/// not set one; `static_dir`, if given, is served under `/`.
pub fn router(engine: Arc<SearchEngine>, min_similarity: f64, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/search", get(search))
        .route("/api/entity/{id}", get(entity))
        .route("/api/{*rest}", get(unknown_api))
        .with_state(AppState { engine, min_similarity });
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(unknown_api),
    }
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    let index = state.engine.index();
    Json(json!({
        "status": "ok",
        "fingerprint": state.engine.fingerprint(),
        "classes": index.classes().len(),
        "index_keys": index.key_count(),
        "postings": index.posting_count(),
    }))
}

fn parse_param<T: std::str::FromStr>(params: &HashMap<String, String>, name: &str) -> Result<Option<T>, ApiError> {
    params
        .get(name)
        .map(|raw| raw.trim().parse::<T>().map_err(|_| ApiError::bad_request("invalid_parameter", format!("{name}={raw:?} is not valid"))))
        .transpose()
}

fn search_options(params: &HashMap<String, String>, default_tau: f64) -> Result<SearchOptions, ApiError> {
    let k = parse_param::<usize>(params, "k")?.unwrap_or(SearchOptions::default().k);
    if !(1..=MAX_K).contains(&k) {
        return Err(ApiError::bad_request("invalid_parameter", format!("k must lie in 1..={MAX_K}, got {k}")));
    }
    let min_similarity = parse_param::<f64>(params, "min_similarity")?.unwrap_or(default_tau);
    if !(0.0..=1.0).contains(&min_similarity) {
        return Err(ApiError::bad_request("invalid_parameter", format!("min_similarity must lie in [0, 1], got {min_similarity}")));
    }
    let evidence_limit = parse_param::<usize>(params, "limit")?.unwrap_or(DEFAULT_EVIDENCE_LIMIT);
    if !(1..=MAX_EVIDENCE_LIMIT).contains(&evidence_limit) {
        return Err(ApiError::bad_request("invalid_parameter", format!("limit must lie in 1..={MAX_EVIDENCE_LIMIT}, got {evidence_limit}")));
    }
    let offset = parse_param::<usize>(params, "offset")?.unwrap_or(0);
    Ok(SearchOptions { k, min_similarity, evidence_limit, offset })
}

async fn search(State(state): State<AppState>, Query(params): Query<HashMap<String, String>>) -> Result<Response, ApiError> {
    let query = params.get("q").cloned().ok_or_else(|| ApiError::bad_request("missing_parameter", "q is required"))?;
    let options = search_options(&params, state.min_similarity)?;
    // SimRank may run on first touch of a component; keep it off the reactor
    let engine = state.engine.clone();
    let response = tokio::task::spawn_blocking(move || engine.search(&query, &options))
        .await
        .map_err(|e| ApiError { error: "internal", detail: e.to_string(), status: StatusCode::INTERNAL_SERVER_ERROR })?;
    Ok(Json(response).into_response())
}

async fn entity(State(state): State<AppState>, UrlPath(raw): UrlPath<String>) -> Result<Response, ApiError> {
    let id: u32 = raw.parse().map_err(|_| ApiError::bad_request("invalid_parameter", format!("class id {raw:?} is not an integer")))?;
    let card = state.engine.entity_card(id).ok_or_else(|| ApiError::not_found("unknown_class", format!("no class with id {id}")))?;
    Ok(Json(card).into_response())
}

async fn unknown_api() -> ApiError {
    ApiError::not_found("not_found", "no such endpoint")
}

/// Serves until Ctrl-C.
pub async fn serve(app: Router, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
