mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{fixtures, NOW};
use serde_json::Value;

fn mlion(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlion"))
        .arg("--data-dir")
        .arg(data)
        .args(["--now", &NOW.to_string()])
        .args(args)
        .env_remove("MLION_CONFIG")
        .output()
        .unwrap()
}

fn ok(data: &Path, args: &[&str]) -> String {
    let out = mlion(data, args);
    assert!(out.status.success(), "mlion {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn ingested() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["ingest", "dir", fixtures().to_str().unwrap()]);
    dir
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mlion(dir.path(), &["forecast"]).status.code(), Some(2));
    assert_eq!(mlion(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(mlion(dir.path(), &["forecast", "--symbol", "BTC", "--resolution", "3d"]).status.code(), Some(2));
}

#[test]
fn domain_errors_carry_a_code() {
    let dir = ingested();
    let out = mlion(dir.path(), &["report", "--symbol", "XRP"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[UNKNOWN_SYMBOL]"));
    let out = mlion(dir.path(), &["recommend", "--category", "Gaming"]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[UNKNOWN_CATEGORY]"));
}

#[test]
fn forecast_is_deterministic_under_seed() {
    let (a, b) = (ingested(), ingested());
    let args = ["--seed", "42", "forecast", "--symbol", "ETH", "--resolution", "1h"];
    let first = ok(a.path(), &args);
    assert_eq!(first, ok(b.path(), &args));
    let parsed: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(parsed["fused"]["steps"].as_array().unwrap().len(), 12);
}

#[test]
fn feedback_replay_matches_online_weights() {
    let dir = ingested();
    let rec: Value = serde_json::from_str(&ok(dir.path(), &["recommend", "--text", "low risk layer 2 picks for the next few weeks", "--user", "ann"])).unwrap();
    let id = rec["id"].as_str().unwrap();
    let items: Vec<&str> = rec["ranked_items"].as_array().unwrap().iter().map(|i| i["news_id"].as_str().unwrap()).collect();
    let mut last = Value::Null;
    for (i, item) in items.iter().take(4).enumerate() {
        let outcome = if i % 2 == 0 { "1" } else { "0.25" };
        last = serde_json::from_str(&ok(dir.path(), &["feedback", "--user", "ann", "--recommendation", id, "--item", item, "--outcome", outcome])).unwrap();
    }
    let replay: Value = serde_json::from_str(&ok(dir.path(), &["feedback-replay"])).unwrap();
    assert_eq!(replay["matches_online"], true);
    assert_eq!(replay["events"], 4);
    assert_eq!(replay["users"]["ann"], last["theta"]);
}

#[test]
fn evaluate_emits_table_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("eval.csv");
    let csv = ok(dir.path(), &["evaluate", "--fixtures", fixtures().join("synthetic").to_str().unwrap(), "--out", out_file.to_str().unwrap()]);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("token,alpha,cv_score,test_mse"));
    let tokens: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(tokens, ["BTC", "DOGE", "ETH", "SOL", "TRX"]);
    assert_eq!(std::fs::read_to_string(out_file).unwrap(), csv);
    let pretty = ok(dir.path(), &["evaluate", "--fixtures", fixtures().join("synthetic").to_str().unwrap(), "--format", "pretty"]);
    assert!(pretty.lines().any(|l| l.starts_with("TRX") && l.ends_with("best performer")));
}

#[test]
fn config_layers_file_env_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mlion"))
        .args(["--config", fixtures().join("mlion.toml").to_str().unwrap(), "--data-dir", dir.path().to_str().unwrap(), "config"])
        .env("MLION_FUSION__WINDOW", "33")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed: toml::Value = toml::from_str(&text).unwrap();
    assert_eq!(parsed["fusion"]["window"].as_integer(), Some(33));
    assert_eq!(parsed["data_dir"].as_str(), dir.path().to_str());
    assert!(parsed["retriever"]["fixture"].as_str().unwrap().ends_with("retriever.json"));

    let bad = Command::new(env!("CARGO_BIN_EXE_mlion")).arg("config").env_remove("MLION_CONFIG").env("MLION_NEWS__TAU", "0.2").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error[CONFIG_INVALID]"));
}

#[test]
fn chat_and_report_from_the_command_line() {
    let dir = ingested();
    let md = ok(dir.path(), &["report", "--symbol", "btc", "--horizon", "Long"]);
    assert!(md.starts_with("# BTC report (Long horizon)"));
    let reply = ok(dir.path(), &["chat", "what is the outlook for ETH?"]);
    assert!(reply.contains("ETH"));
}
