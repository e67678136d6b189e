//! HTTP JSON API over a shared, swappable engine.

use std::collections::BTreeSet;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::json;
use trendsearch::engine::Engine;
use trendsearch::facets::parse_exclusions;
use trendsearch::trend_labeler::Observation;
use trendsearch::Error;

/// The engine currently being served. Requests take a snapshot of the
/// `Arc`, so a reload swaps it without disturbing requests in flight.
#[derive(Clone, Default)]
pub struct AppState {
    engine: Arc<RwLock<Option<Arc<Engine>>>>,
}

impl AppState {
    pub fn new(engine: Option<Engine>) -> Self {
        AppState {
            engine: Arc::new(RwLock::new(engine.map(Arc::new))),
        }
    }

    pub fn snapshot(&self) -> Option<Arc<Engine>> {
        self.engine.read().expect("engine lock").clone()
    }

    pub fn swap(&self, engine: Engine) {
        *self.engine.write().expect("engine lock") = Some(Arc::new(engine));
    }
}

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn unavailable() -> Self {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "index not loaded")
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::EmptyQuery | Error::NoQueryTerms | Error::InvalidRange(_) => {
                StatusCode::BAD_REQUEST
            }
            Error::UnknownChart(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn engine(state: &AppState) -> Result<Arc<Engine>, ApiError> {
    state.snapshot().ok_or_else(ApiError::unavailable)
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    pub q: Option<String>,
    pub exclude: Option<String>,
    pub page: Option<usize>,
}

async fn search(
    State(state): State<AppState>,
    Query(p): Query<SearchParams>,
) -> ApiResult<trendsearch::response::SearchResponse> {
    let engine = engine(&state)?;
    let exclude: BTreeSet<String> = p.exclude.as_deref().map(parse_exclusions).unwrap_or_default();
    let q = p.q.unwrap_or_default();
    Ok(Json(engine.search(&q, &exclude, p.page.unwrap_or(1))?))
}

#[derive(Debug, Deserialize)]
pub struct RangeParams {
    pub from: Option<String>,
    pub to: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChartResponse {
    pub chart_id: String,
    pub points: Vec<Observation>,
}

fn parse_date(field: &str, value: Option<&str>) -> Result<Option<NaiveDate>, ApiError> {
    value
        .filter(|v| !v.is_empty())
        .map(|v| {
            NaiveDate::parse_from_str(v, "%Y-%m-%d").map_err(|_| {
                ApiError::new(
                    StatusCode::BAD_REQUEST,
                    format!("{field} must be a YYYY-MM-DD date, got {v:?}"),
                )
            })
        })
        .transpose()
}

async fn chart(
    State(state): State<AppState>,
    Path(chart_id): Path<String>,
    Query(r): Query<RangeParams>,
) -> ApiResult<ChartResponse> {
    let engine = engine(&state)?;
    let from = parse_date("from", r.from.as_deref())?;
    let to = parse_date("to", r.to.as_deref())?;
    let points = engine.chart_points(&chart_id, from, to)?;
    Ok(Json(ChartResponse { chart_id, points }))
}

async fn labels(State(state): State<AppState>) -> ApiResult<trendsearch::engine::LabelsResponse> {
    Ok(Json(engine(&state)?.labels()))
}

async fn hierarchy(
    State(state): State<AppState>,
) -> ApiResult<Vec<trendsearch::facets::SubsumptionEdge>> {
    Ok(Json(engine(&state)?.hierarchy()))
}

#[derive(Debug, Deserialize)]
pub struct RelatedParams {
    pub term: String,
}

async fn related(
    State(state): State<AppState>,
    Query(p): Query<RelatedParams>,
) -> ApiResult<BTreeSet<String>> {
    Ok(Json(engine(&state)?.related(&p.term)))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/search", get(search))
        .route("/api/charts/{chart_id}", get(chart))
        .route("/api/labels", get(labels))
        .route("/api/hierarchy", get(hierarchy))
        .route("/api/related", get(related))
        .with_state(state)
}
