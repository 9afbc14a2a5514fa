use std::future::Future;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::engine::{ChatRequest, Engine, FeedbackRequest, KlineRange};
use crate::error::Error;
use crate::horizon::Horizon;
use crate::market_data::{parse_timestamp, Resolution, Timestamp};
use crate::recommend::IntentRequest;

/// Error body: `{code, message}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn bad_request(message: impl ToString) -> Self {
        ApiError { status: 400, code: "INVALID_ARGUMENT".into(), message: message.to_string() }
    }
}

fn status_for(e: &Error) -> u16 {
    match e {
        Error::UnknownSymbol(_) | Error::UnknownCategory(_) | Error::UnknownSeed(_) => 404,
        Error::InsufficientHistory { .. } | Error::GapInSeries(_) | Error::MissingInput(_) | Error::MissingPartial(_) => 422,
        Error::ProviderUnavailable { .. } | Error::StorageUnavailable(_) => 503,
        Error::MalformedRow { .. }
        | Error::OhlcInvariantViolated(_)
        | Error::NonMonotonicTimestamps(_)
        | Error::InvalidArgument(_)
        | Error::AlphaOutOfRange(_)
        | Error::NonPositiveActual(_)
        | Error::ComponentOutOfRange(_)
        | Error::DimensionMismatch { .. }
        | Error::LengthMismatch { .. }
        | Error::MissingField(_)
        | Error::MissingTemplate(_)
        | Error::Json(_) => 400,
        _ => 500,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError { status: status_for(&e), code: e.code().to_string(), message: e.to_string() }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;
type AppState = Arc<Engine>;

/// Runs a blocking engine call off the async workers.
async fn blocking<T, F>(engine: &AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Engine) -> crate::Result<T> + Send + 'static,
{
    let engine = engine.clone();
    match tokio::task::spawn_blocking(move || f(&engine)).await {
        Ok(r) => r.map(Json).map_err(ApiError::from),
        Err(e) => Err(ApiError { status: 500, code: "INTERNAL".into(), message: e.to_string() }),
    }
}

fn resolution(raw: Option<&str>) -> Result<Resolution, ApiError> {
    raw.map_or(Ok(Resolution::OneDay), |r| r.parse().map_err(ApiError::from))
}

fn timestamp(name: &str, raw: Option<&str>) -> Result<Option<Timestamp>, ApiError> {
    raw.map(|r| parse_timestamp(r).ok_or_else(|| ApiError::bad_request(format!("{name}: cannot parse '{r}' as a timestamp")))).transpose()
}

#[derive(Debug, Deserialize)]
struct KlinesQuery {
    symbol: String,
    resolution: Option<String>,
    end: Option<String>,
    span: Option<i64>,
    from: Option<String>,
    to: Option<String>,
}

async fn klines(State(engine): State<AppState>, q: Result<Query<KlinesQuery>, QueryRejection>) -> ApiResult<crate::market_data::CandleSeries> {
    let Query(q) = q?;
    let res = resolution(q.resolution.as_deref())?;
    let range = match (timestamp("end", q.end.as_deref())?, q.span, timestamp("from", q.from.as_deref())?, timestamp("to", q.to.as_deref())?) {
        (Some(end), Some(span), None, None) => KlineRange::Window { end, span },
        (None, None, from, to) if from.is_some() || to.is_some() => {
            KlineRange::Between { from: from.unwrap_or(i64::MIN), to: to.unwrap_or(i64::MAX) }
        }
        (None, None, None, None) => KlineRange::All,
        _ => return Err(ApiError::bad_request("use either end+span or from/to")),
    };
    blocking(&engine, move |e| e.klines(&q.symbol, res, range)).await
}

async fn coins(State(engine): State<AppState>) -> ApiResult<Vec<super::CoinInfo>> {
    blocking(&engine, |e| e.coins()).await
}

#[derive(Debug, Deserialize)]
struct PredictionsQuery {
    symbol: String,
    resolution: Option<String>,
    from: Option<String>,
    to: Option<String>,
}

async fn predictions(
    State(engine): State<AppState>,
    q: Result<Query<PredictionsQuery>, QueryRejection>,
) -> ApiResult<Vec<crate::market_data::PredictionRecord>> {
    let Query(q) = q?;
    let res = resolution(q.resolution.as_deref())?;
    let (from, to) = (timestamp("from", q.from.as_deref())?, timestamp("to", q.to.as_deref())?);
    blocking(&engine, move |e| e.predictions(&q.symbol, res, from, to)).await
}

#[derive(Debug, Deserialize)]
struct ForecastBody {
    symbol: String,
    resolution: Option<String>,
    t0: Option<serde_json::Value>,
    seed: Option<u64>,
}

async fn forecast(State(engine): State<AppState>, body: Result<Json<ForecastBody>, JsonRejection>) -> ApiResult<crate::forecast::ForecastOutcome> {
    let Json(b) = body?;
    let res = resolution(b.resolution.as_deref())?;
    let t0 = match &b.t0 {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::Number(n)) => Some(n.as_i64().ok_or_else(|| ApiError::bad_request("t0 must be an integer"))?),
        Some(serde_json::Value::String(s)) => timestamp("t0", Some(s))?,
        Some(_) => return Err(ApiError::bad_request("t0 must be epoch seconds or RFC 3339")),
    };
    blocking(&engine, move |e| e.forecast(&b.symbol, res, t0, b.seed)).await
}

#[derive(Debug, Deserialize)]
struct ReportQuery {
    symbol: String,
    horizon: Option<String>,
}

async fn report(State(engine): State<AppState>, q: Result<Query<ReportQuery>, QueryRejection>) -> ApiResult<crate::report::ReportRun> {
    let Query(q) = q?;
    let horizon: Horizon = q.horizon.as_deref().map(str::parse).transpose().map_err(ApiError::from)?.unwrap_or_default();
    blocking(&engine, move |e| e.report(&q.symbol, horizon)).await
}

#[derive(Debug, Deserialize)]
struct RecommendationsQuery {
    category: Option<String>,
    risk: Option<String>,
    horizon: Option<String>,
    text: Option<String>,
    user: Option<String>,
}

async fn recommendations(
    State(engine): State<AppState>,
    q: Result<Query<RecommendationsQuery>, QueryRejection>,
) -> ApiResult<crate::recommend::Recommendation> {
    let Query(q) = q?;
    let request = IntentRequest { category: q.category, risk: q.risk, horizon: q.horizon, text: q.text };
    blocking(&engine, move |e| e.recommend(&request, q.user.as_deref())).await
}

async fn feedback(State(engine): State<AppState>, body: Result<Json<FeedbackRequest>, JsonRejection>) -> ApiResult<super::FeedbackAck> {
    let Json(b) = body?;
    blocking(&engine, move |e| e.feedback(&b)).await
}

async fn chat(State(engine): State<AppState>, body: Result<Json<ChatRequest>, JsonRejection>) -> ApiResult<super::ChatReply> {
    let Json(b) = body?;
    blocking(&engine, move |e| e.chat(&b)).await
}

#[derive(Debug, Deserialize)]
struct PolicyQuery {
    user: Option<String>,
}

async fn policy(State(engine): State<AppState>, q: Result<Query<PolicyQuery>, QueryRejection>) -> ApiResult<crate::recommend::PolicySnapshot> {
    let Query(q) = q?;
    blocking(&engine, move |e| Ok(e.policy(q.user.as_deref().unwrap_or("anonymous")))).await
}

async fn health(State(engine): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "now": engine.now() }))
}

async fn not_found() -> ApiError {
    ApiError { status: 404, code: "NOT_FOUND".into(), message: "no such route".into() }
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/klines", get(klines))
        .route("/api/coins", get(coins))
        .route("/api/predictions", get(predictions))
        .route("/api/forecast", post(forecast))
        .route("/api/report", get(report))
        .route("/api/chat", post(chat))
        .route("/api/recommendations", get(recommendations))
        .route("/api/feedback", post(feedback))
        .route("/api/policy", get(policy))
        .fallback(not_found)
        .with_state(engine)
}

/// Binds `addr` and serves until `shutdown` resolves, then drains in-flight
/// requests. `on_bound` receives the actual local address.
pub async fn serve(
    engine: Arc<Engine>,
    addr: &str,
    on_bound: impl FnOnce(std::net::SocketAddr),
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::BindFailure { addr: addr.to_string(), reason: e.to_string() })?;
    let local = listener.local_addr()?;
    on_bound(local);
    tracing::info!(%local, "listening");
    axum::serve(listener, router(engine)).with_graceful_shutdown(shutdown).await?;
    Ok(())
}
