mod common;

use std::sync::Arc;
use std::time::Duration;

use common::{client, config, fixtures, loaded, Server, NOW};
use mlion_core::horizon::Horizon;
use mlion_core::market_data::{window, CandleSeries, PredictionRecord, Resolution};
use mlion_core::recommend::{IntentRequest, Recommendation};
use mlion_core::report::FixtureRetriever;
use mlion_core::service::{mock_router, router, ApiError, Engine, FeedbackAck, FeedbackRequest};
use serde_json::{json, Value};

fn api(engine: Engine) -> Server {
    Server::start(router(Arc::new(engine)))
}

#[test]
fn klines_equal_library_window() {
    let dir = tempfile::tempdir().unwrap();
    let engine = loaded(config(dir.path()));
    let expected = window(&engine.series("BTC", Resolution::OneDay).unwrap(), NOW, 30 * 86_400).unwrap();
    let server = api(engine);
    let url = server.url(&format!("/api/klines?symbol=BTC&resolution=1d&end={NOW}&span={}", 30 * 86_400));
    let got: CandleSeries = client().get(url).send().unwrap().json().unwrap();
    assert_eq!(got, expected);
    assert_eq!(got.len(), 30);

    let between: CandleSeries = client()
        .get(server.url(&format!("/api/klines?symbol=BTC&resolution=1d&from={}&to={NOW}", NOW - 86_400 * 4)))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert!(between.candles.iter().all(|c| (NOW - 86_400 * 4..=NOW).contains(&c.t)));
    assert!(!between.candles.is_empty());
}

#[test]
fn errors_are_code_and_message() {
    let dir = tempfile::tempdir().unwrap();
    let server = api(loaded(config(dir.path())));
    let r = client().get(server.url("/api/klines?symbol=DOGE")).send().unwrap();
    assert_eq!(r.status().as_u16(), 404);
    let body: ApiError = r.json().unwrap();
    assert_eq!(body.code, "UNKNOWN_SYMBOL");
    assert!(!body.message.is_empty());

    let r = client().get(server.url("/api/klines")).send().unwrap();
    assert_eq!(r.status().as_u16(), 400);
    assert_eq!(r.json::<ApiError>().unwrap().code, "INVALID_ARGUMENT");

    let r = client().get(server.url("/api/klines?symbol=BTC&resolution=2w")).send().unwrap();
    assert_eq!(r.status().as_u16(), 400);

    let r = client().post(server.url("/api/feedback")).body("{not json").header("content-type", "application/json").send().unwrap();
    assert_eq!(r.status().as_u16(), 400);

    let r = client().get(server.url("/api/nowhere")).send().unwrap();
    assert_eq!(r.status().as_u16(), 404);
    assert_eq!(r.json::<ApiError>().unwrap().code, "NOT_FOUND");
}

#[test]
fn coins_and_health() {
    let dir = tempfile::tempdir().unwrap();
    let server = api(loaded(config(dir.path())));
    let coins: Value = client().get(server.url("/api/coins")).send().unwrap().json().unwrap();
    let symbols: Vec<&str> = coins.as_array().unwrap().iter().map(|c| c["symbol"].as_str().unwrap()).collect();
    assert_eq!(symbols, ["BTC", "ETH"]);
    assert_eq!(client().get(server.url("/api/health")).send().unwrap().status().as_u16(), 200);
}

#[test]
fn forecast_is_persisted_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let server = api(loaded(config(dir.path())));
    let body = json!({"symbol": "BTC", "resolution": "1d", "t0": NOW, "seed": 5});
    let r = client().post(server.url("/api/forecast")).json(&body).send().unwrap();
    assert_eq!(r.status().as_u16(), 200);
    let outcome: Value = r.json().unwrap();
    assert_eq!(outcome["records"].as_array().unwrap().len(), 3);

    let records: Vec<PredictionRecord> = client().get(server.url("/api/predictions?symbol=BTC&resolution=1d")).send().unwrap().json().unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r.issued_at == NOW));

    let other = tempfile::tempdir().unwrap();
    let direct = loaded(config(other.path())).forecast("BTC", Resolution::OneDay, Some(NOW), Some(5)).unwrap();
    assert_eq!(serde_json::to_value(&direct.fused).unwrap(), outcome["fused"]);
    assert_eq!(serde_json::to_value(&direct.llm).unwrap(), outcome["llm"]);

    let r = client().get(server.url("/api/predictions?symbol=SOL")).send().unwrap();
    assert_eq!(r.status().as_u16(), 404);
}

fn rec_query(user: &str) -> String {
    format!("/api/recommendations?category=Layer2&risk=Low&horizon=Medium&user={user}")
}

#[test]
fn feedback_moves_recommendations_like_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let server = api(loaded(config(dir.path())));
    let first: Recommendation = client().get(server.url(&rec_query("bob"))).send().unwrap().json().unwrap();
    assert!(!first.ranked_items.is_empty());
    let mut acks = Vec::new();
    for (i, item) in first.ranked_items.iter().take(3).enumerate() {
        let req = FeedbackRequest {
            user: "bob".into(),
            recommendation: first.id.clone(),
            item: item.news_id.clone(),
            outcome: if i == 1 { 1.0 } else { 0.0 },
        };
        let r = client().post(server.url("/api/feedback")).json(&req).send().unwrap();
        assert_eq!(r.status().as_u16(), 200);
        acks.push(r.json::<FeedbackAck>().unwrap());
    }
    let second: Recommendation = client().get(server.url(&rec_query("bob"))).send().unwrap().json().unwrap();
    assert_eq!(second.policy_version, 3);

    let other = tempfile::tempdir().unwrap();
    let engine = loaded(config(other.path()));
    let intent = IntentRequest { category: Some("Layer2".into()), risk: Some("Low".into()), horizon: Some("Medium".into()), text: None };
    let lib_first = engine.recommend(&intent, Some("bob")).unwrap();
    assert_eq!(lib_first, first);
    for (i, item) in lib_first.ranked_items.iter().take(3).enumerate() {
        let ack = engine
            .feedback(&FeedbackRequest {
                user: "bob".into(),
                recommendation: lib_first.id.clone(),
                item: item.news_id.clone(),
                outcome: if i == 1 { 1.0 } else { 0.0 },
            })
            .unwrap();
        assert_eq!(ack.theta, acks[i].theta);
    }
    assert_eq!(engine.recommend(&intent, Some("bob")).unwrap(), second);

    let policy: Value = client().get(server.url("/api/policy?user=bob")).send().unwrap().json().unwrap();
    assert_eq!(policy["version"], 3);
    let untouched: Value = client().get(server.url("/api/policy?user=carol")).send().unwrap().json().unwrap();
    assert!(untouched["weights"]["theta"].as_array().unwrap().iter().all(|t| t == 0.0));

    let bad = FeedbackRequest { user: "bob".into(), recommendation: "missing".into(), item: "x".into(), outcome: 1.0 };
    assert!(client().post(server.url("/api/feedback")).json(&bad).send().unwrap().status().is_client_error());
}

#[test]
fn report_and_chat_routes() {
    let dir = tempfile::tempdir().unwrap();
    let engine = loaded(config(dir.path()));
    let expected = engine.report("BTC", Horizon::Short).unwrap();
    let server = api(engine);
    let run: Value = client().get(server.url("/api/report?symbol=BTC&horizon=Short")).send().unwrap().json().unwrap();
    assert_eq!(run["enhanced"], serde_json::to_value(&expected.enhanced).unwrap());

    let reply: Value = client()
        .post(server.url("/api/chat"))
        .json(&json!({"session_id": "s1", "message": "How does ETH look this week?"}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(reply["route"], "report");
    assert_eq!(reply["session_id"], "s1");
    let reply: Value = client()
        .post(server.url("/api/chat"))
        .json(&json!({"session_id": "s2", "message": "Recommend some low risk layer2 news"}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    assert_eq!(reply["route"], "recommendation");
}

#[test]
fn mock_providers_drive_the_remote_tracks() {
    let items = FixtureRetriever::from_file(fixtures().join("retriever.json")).unwrap();
    let mock = Server::start(mock_router(items));

    let remote_dir = tempfile::tempdir().unwrap();
    let mut remote = config(remote_dir.path());
    remote.forecast.llm.url = Some(mock.url("/forecast"));
    remote.retriever.provider.url = Some(mock.url("/retrieve"));
    let remote = loaded(remote);

    let out = remote.forecast("BTC", Resolution::OneDay, Some(NOW), None).unwrap();
    assert!(out.degraded.is_none());
    // The request carries the hourly window ending at t0; the mock repeats its last close.
    let last_close = remote.series("BTC", Resolution::OneHour).unwrap().candles.last().unwrap().c;
    let llm = out.llm.unwrap();
    assert!(llm.steps.iter().all(|c| c.c == last_close));
    assert_eq!(llm.steps[0].t, NOW + 86_400);

    let local_dir = tempfile::tempdir().unwrap();
    let mut local = config(local_dir.path());
    local.retriever.fixture = Some(fixtures().join("retriever.json"));
    let local = loaded(local);
    let a = remote.report("BTC", Horizon::Short).unwrap();
    let b = local.report("BTC", Horizon::Short).unwrap();
    assert!(!a.enhanced.additions.is_empty());
    assert_eq!(a.enhanced.additions, b.enhanced.additions);
    assert!(a.warnings.is_empty());
}

#[test]
fn unreachable_providers_degrade() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    // Reserved port on loopback with nothing listening.
    let dead = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    cfg.forecast.llm.url = Some(format!("http://{dead}/forecast"));
    cfg.forecast.llm.retries = 0;
    cfg.forecast.llm.timeout_ms = 500;
    cfg.retriever.provider.url = Some(format!("http://{dead}/retrieve"));
    cfg.retriever.provider.retries = 0;
    cfg.retriever.provider.timeout_ms = 500;
    let engine = loaded(cfg);
    let started = std::time::Instant::now();
    let out = engine.forecast("BTC", Resolution::OneDay, Some(NOW), None).unwrap();
    assert!(out.degraded.is_some());
    assert_eq!(out.alpha, 0.0);
    assert_eq!(out.records.len(), 2);
    let run = engine.report("BTC", Horizon::Short).unwrap();
    assert!(run.enhanced.additions.is_empty());
    assert!(!run.warnings.is_empty());
    assert!(started.elapsed() < Duration::from_secs(10));
}

#[test]
fn openapi_lists_every_route() {
    let doc = std::fs::read_to_string(fixtures().join("../docs/openapi.yaml")).unwrap();
    for route in [
        "/api/health",
        "/api/klines",
        "/api/coins",
        "/api/predictions",
        "/api/forecast",
        "/api/report",
        "/api/chat",
        "/api/recommendations",
        "/api/feedback",
        "/api/policy",
    ] {
        assert!(doc.contains(&format!("\n  {route}:\n")), "{route} missing from openapi.yaml");
    }
}
