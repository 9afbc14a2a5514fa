//! Byte-for-byte snapshots under `fixtures/golden/`. Regenerate with
//! `UPDATE_GOLDEN=1 cargo test --test golden` and review the diff.

mod common;

use std::path::PathBuf;

use common::{config, fixtures, loaded, NOW};
use mlion_core::horizon::Horizon;
use mlion_core::market_data::Resolution;
use mlion_core::recommend::{plan_queries, Categories, Intent, Risk};
use mlion_core::report::{run_semantic_agent, AgentId, SentenceDedupe};

fn golden(name: &str) -> PathBuf {
    fixtures().join("golden").join(name)
}

fn check(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1", path.display()));
    assert!(expected == actual, "{name} drifted from its snapshot:\n--- expected\n{expected}\n--- actual\n{actual}");
}

#[test]
fn forecast_summary() {
    let dir = tempfile::tempdir().unwrap();
    let engine = loaded(config(dir.path()));
    let daily = engine.forecast("BTC", Resolution::OneDay, Some(NOW), Some(7)).unwrap();
    let hourly = engine.forecast("ETH", Resolution::OneHour, Some(NOW), Some(7)).unwrap();
    check("summary.txt", &format!("{}\n\n{}\n", daily.summary, hourly.summary));
}

#[test]
fn semantic_agent_output() {
    let dir = tempfile::tempdir().unwrap();
    let engine = loaded(config(dir.path()));
    let run = engine.report("BTC", Horizon::Medium).unwrap();
    let by = |id: AgentId| run.partials.iter().find(|p| p.agent == id).unwrap();
    let out = run_semantic_agent(by(AgentId::A1), by(AgentId::A2), by(AgentId::A3), &SentenceDedupe, NOW);
    check("semantic.json", &format!("{}\n", serde_json::to_string_pretty(&out).unwrap()));
}

#[test]
fn enhancement_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let engine = loaded(config(dir.path()));
    let run = engine.report("ETH", Horizon::Short).unwrap();
    check("prompt.txt", &run.prompt.render());
}

#[test]
fn intent_query_lists() {
    let intents = [
        ("Layer2", Risk::Low, Horizon::Medium),
        ("Layer1", Risk::High, Horizon::Short),
        ("meme", Risk::Medium, Horizon::Long),
        ("Bitcoin", Risk::Low, Horizon::Long),
    ];
    let mut out = String::new();
    for (category, risk, horizon) in intents {
        let categories = Categories::builtin();
        let intent = Intent { category: categories.canonical(category).unwrap().to_string(), risk, horizon };
        out.push_str(&format!("# {} / {risk} / {horizon}\n", intent.category));
        for q in plan_queries(&intent, categories).unwrap() {
            out.push_str(&q);
            out.push('\n');
        }
    }
    check("queries.txt", &out);
}
