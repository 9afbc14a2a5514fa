use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::Timestamp;
use crate::text::{jaccard, token_set};

/// A retrieved piece of evidence with its three quality components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub source: String,
    pub snippet: String,
    pub time: Timestamp,
    #[serde(default)]
    pub url: String,
    pub relevance: f64,
    pub recency: f64,
    pub credibility: f64,
    pub score: f64,
}

impl Signal {
    /// Short stable identifier: source plus time.
    pub fn id(&self) -> String {
        format!("{}@{}", self.source, self.time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalWeights {
    pub relevance: f64,
    pub recency: f64,
    pub credibility: f64,
}

impl Default for SignalWeights {
    fn default() -> Self {
        SignalWeights { relevance: 0.5, recency: 0.3, credibility: 0.2 }
    }
}

impl SignalWeights {
    pub fn new(relevance: f64, recency: f64, credibility: f64) -> Self {
        SignalWeights { relevance, recency, credibility }
    }

    /// Non-negative and summing to one (within 1e-9).
    pub fn validate(&self) -> Result<()> {
        let w = [self.relevance, self.recency, self.credibility];
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::ConfigInvalid("signal weights must be non-negative and sum to 1".into()));
        }
        Ok(())
    }
}

fn component(name: &'static str, x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::ComponentOutOfRange(name))
    }
}

pub fn score_signal(relevance: f64, recency: f64, credibility: f64, weights: &SignalWeights) -> Result<f64> {
    let (a, b, c) = (component("relevance", relevance)?, component("recency", recency)?, component("credibility", credibility)?);
    Ok(weights.relevance * a + weights.recency * b + weights.credibility * c)
}

/// Total order used for ranking: score desc, then newer first, then source.
pub fn signal_order(a: &Signal, b: &Signal) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then_with(|| b.time.cmp(&a.time)).then_with(|| a.source.cmp(&b.source))
}

/// Rescores every candidate under `weights`, sorts by [`signal_order`] and
/// keeps at most `top_k` with `score >= threshold`. Candidates with a
/// component outside `[0, 1]` are dropped.
pub fn validate_signals(candidates: &[Signal], weights: &SignalWeights, top_k: usize, threshold: f64) -> Vec<Signal> {
    let mut scored: Vec<Signal> = candidates
        .iter()
        .filter_map(|s| {
            let score = score_signal(s.relevance, s.recency, s.credibility, weights).ok()?;
            Some(Signal { score, ..s.clone() })
        })
        .collect();
    scored.sort_by(signal_order);
    scored.into_iter().take_while(|s| s.score >= threshold).take(top_k).collect()
}

/// `exp(-lambda * age_hours)`; future items count as age 0.
pub fn recency(time: Timestamp, now: Timestamp, lambda: f64) -> f64 {
    let age_h = (now - time).max(0) as f64 / 3600.0;
    (-lambda * age_h).exp()
}

pub fn relevance(query: &str, snippet: &str) -> f64 {
    jaccard(&token_set(query), &token_set(snippet))
}

/// Source reputation lookup (case-insensitive), falling back to a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibilityTable {
    pub default: f64,
    pub sources: BTreeMap<String, f64>,
}

static BUILTIN: LazyLock<CredibilityTable> = LazyLock::new(|| {
    let sources: BTreeMap<String, f64> = serde_json::from_str(include_str!("../../data/credibility.json")).expect("credibility table");
    CredibilityTable { default: 0.5, sources }
});

impl Default for CredibilityTable {
    fn default() -> Self {
        BUILTIN.clone()
    }
}

impl CredibilityTable {
    pub fn get(&self, source: &str) -> f64 {
        self.sources.get(&source.trim().to_lowercase()).copied().unwrap_or(self.default)
    }
}

/// Scoring settings for turning retrieved items into signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalPolicy {
    pub weights: SignalWeights,
    pub threshold: f64,
    pub top_k: usize,
    pub recency_lambda: f64,
}

impl Default for SignalPolicy {
    fn default() -> Self {
        SignalPolicy { weights: SignalWeights::default(), threshold: 0.4, top_k: 10, recency_lambda: 0.05 }
    }
}

/// Raw retriever output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedItem {
    pub source: String,
    pub snippet: String,
    pub time: Timestamp,
    #[serde(default)]
    pub url: String,
}

impl SignalPolicy {
    pub fn to_signal(&self, item: &RetrievedItem, query: &str, now: Timestamp, credibility: &CredibilityTable) -> Signal {
        let rel = relevance(query, &item.snippet);
        let rec = recency(item.time, now, self.recency_lambda);
        let cred = credibility.get(&item.source).clamp(0.0, 1.0);
        let score = score_signal(rel, rec, cred, &self.weights).unwrap_or(0.0);
        Signal {
            source: item.source.clone(),
            snippet: item.snippet.clone(),
            time: item.time,
            url: item.url.clone(),
            relevance: rel,
            recency: rec,
            credibility: cred,
            score,
        }
    }
}
