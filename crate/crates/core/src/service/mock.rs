//! Offline stand-ins for the remote providers, speaking the same JSON as
//! [`HttpForecastProvider`](crate::forecast::HttpForecastProvider) and
//! [`HttpRetriever`](crate::report::HttpRetriever). Used by the tests and by
//! `mlion mock-providers` for demos without network access.

use std::future::Future;
use std::sync::Arc;

use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::market_data::{Candle, Resolution, Timestamp};
use crate::report::{FixtureRetriever, TimeWindow};

#[derive(Debug, Deserialize)]
struct RetrieveBody {
    window: TimeWindow,
}

#[derive(Debug, Deserialize)]
struct ForecastBody {
    resolution: Resolution,
    horizon: usize,
    candles_14d: Vec<Candle>,
    candles_48h: Vec<Candle>,
    t0: Timestamp,
}

#[derive(Debug, Serialize)]
struct Step {
    t: Timestamp,
    o: f64,
    h: f64,
    l: f64,
    c: f64,
    v: f64,
}

#[derive(Debug, Serialize)]
struct ForecastReply {
    steps: Vec<Step>,
}

/// `POST /retrieve` serves the fixture items inside the requested window;
/// `POST /forecast` answers a flat persistence path from the last candle.
pub fn mock_router(items: FixtureRetriever) -> Router {
    let items = Arc::new(items);
    Router::new()
        .route(
            "/retrieve",
            post(move |Json(body): Json<RetrieveBody>| {
                let items = items.clone();
                async move {
                    let hits: Vec<_> = items.items.iter().filter(|i| body.window.contains(i.time)).cloned().collect();
                    Json(hits)
                }
            }),
        )
        .route("/forecast", post(forecast))
}

async fn forecast(Json(body): Json<ForecastBody>) -> Result<Json<ForecastReply>, (StatusCode, String)> {
    let last = body
        .candles_48h
        .last()
        .or(body.candles_14d.last())
        .ok_or((StatusCode::UNPROCESSABLE_ENTITY, "no candles in request".to_string()))?;
    let step = body.resolution.step();
    let steps = (1..=body.horizon as i64).map(|i| Step { t: body.t0 + step * i, o: last.c, h: last.c, l: last.c, c: last.c, v: last.v }).collect();
    Ok(Json(ForecastReply { steps }))
}

/// Binds `addr` and serves [`mock_router`] until `shutdown` resolves.
pub async fn serve_mock(
    items: FixtureRetriever,
    addr: &str,
    on_bound: impl FnOnce(std::net::SocketAddr),
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::BindFailure { addr: addr.to_string(), reason: e.to_string() })?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, mock_router(items)).with_graceful_shutdown(shutdown).await?;
    Ok(())
}
