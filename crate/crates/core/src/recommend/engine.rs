use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::intent::{plan_queries, Categories, Intent, Risk};
use super::policy::{score_candidate, FEATURE_DIM};
use crate::error::Result;
use crate::market_data::Timestamp;
use crate::news::{KnowledgeGraph, NewsItem, NodeId};
use crate::report::{recency, relevance, CredibilityTable};
use crate::text::first_sentence;

pub const MAX_PATH_HOPS: usize = 2;
pub const PATH_NONE: &str = "no_path";
pub const PATH_TRUNCATED: &str = "truncated";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub news_id: String,
    pub score: f64,
    pub features: Vec<f64>,
    /// Node keys (`doc:<id>`, `ent:<id>`) from the item to a category entity.
    pub evidence_path: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_flag: Option<String>,
    pub headline: String,
    pub time: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub id: String,
    pub summary: String,
    pub ranked_items: Vec<RankedItem>,
    pub intent_echo: Intent,
    pub generated_at: Timestamp,
    /// Number of feedback events folded into the weights used.
    pub policy_version: u64,
}

impl Recommendation {
    pub fn item(&self, news_id: &str) -> Option<&RankedItem> {
        self.ranked_items.iter().find(|r| r.news_id == news_id)
    }
}

/// Writes the recommendation summary.
pub trait SummaryProvider: Send + Sync {
    fn summarize(&self, intent: &Intent, ranked: &[RankedItem], items: &[&NewsItem]) -> Result<String>;
}

/// First sentence of each ranked item plus its entity path.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtractiveSummary;

impl SummaryProvider for ExtractiveSummary {
    fn summarize(&self, intent: &Intent, ranked: &[RankedItem], items: &[&NewsItem]) -> Result<String> {
        let mut lines = vec![format!(
            "{} picks for {} risk over the {} ({}):",
            intent.category,
            intent.risk.to_string().to_lowercase(),
            intent.horizon.window_phrase(),
            ranked.len()
        )];
        for (r, item) in ranked.iter().zip(items) {
            let text = if item.body.trim().is_empty() { item.headline.clone() } else { first_sentence(&item.body) };
            let path = match (&r.path_flag, r.evidence_path.len()) {
                (Some(f), _) if f == PATH_NONE => "no graph link to the category".to_string(),
                (_, _) => {
                    let ents: Vec<&str> = r.evidence_path.iter().filter_map(|n| n.strip_prefix("ent:")).collect();
                    format!("via {}", ents.join(" -> "))
                }
            };
            lines.push(format!("- {} [{}]", text.trim(), path));
        }
        Ok(lines.join("\n"))
    }
}

/// Everything `recommend` needs besides the items.
pub struct RecommendContext<'a> {
    pub graph: &'a KnowledgeGraph,
    pub categories: &'a Categories,
    pub credibility: &'a CredibilityTable,
    pub summary: &'a dyn SummaryProvider,
    pub recency_lambda: f64,
    pub now: Timestamp,
}

/// How well an item's sentiment fits the risk appetite: high risk favors
/// bullish news, low risk favors cautious news, medium favors balance.
pub fn sentiment_match(risk: Risk, sentiment_score: Option<f64>) -> f64 {
    let s = sentiment_score.unwrap_or(0.5).clamp(0.0, 1.0);
    match risk {
        Risk::High => s,
        Risk::Medium => 1.0 - (s - 0.5).abs(),
        Risk::Low => 1.0 - s,
    }
}

/// Feature vector of one candidate.
pub fn features(item: &NewsItem, intent: &Intent, queries: &[String], ctx: &RecommendContext<'_>) -> Vec<f64> {
    let text = item.text();
    let rel = queries.iter().map(|q| relevance(q, &text)).fold(0.0, f64::max);
    let phi = vec![
        rel,
        recency(item.time, ctx.now, ctx.recency_lambda),
        ctx.credibility.get(&item.source).clamp(0.0, 1.0),
        sentiment_match(intent.risk, item.sentiment_score),
        ctx.graph.doc_degree_norm(&item.id),
    ];
    debug_assert_eq!(phi.len(), FEATURE_DIM);
    phi
}

fn evidence(graph: &KnowledgeGraph, doc: &str, targets: &BTreeSet<String>) -> (Vec<String>, Option<String>) {
    if let Some(path) = graph.evidence_path(doc, targets, MAX_PATH_HOPS) {
        return (path.iter().map(NodeId::key).collect(), None);
    }
    match graph.evidence_path(doc, targets, usize::MAX) {
        // Keep the first MAX_PATH_HOPS entity hops of the longer path.
        Some(path) => (path.iter().take(2 * MAX_PATH_HOPS).map(NodeId::key).collect(), Some(PATH_TRUNCATED.to_string())),
        None => (Vec::new(), Some(PATH_NONE.to_string())),
    }
}

/// Scores every item, keeps the `top_k` best (ties: newer first, then id)
/// and attaches evidence paths and a summary.
pub fn recommend(items: &[NewsItem], intent: &Intent, theta: &[f64], top_k: usize, ctx: &RecommendContext<'_>) -> Result<Recommendation> {
    let queries = plan_queries(intent, ctx.categories)?;
    let targets: BTreeSet<String> =
        ctx.categories.get(&intent.category)?.entities.iter().filter(|e| ctx.graph.has_entity(e)).cloned().collect();

    let mut scored = Vec::with_capacity(items.len());
    for item in items {
        let phi = features(item, intent, &queries, ctx);
        let score = score_candidate(theta, &phi)?;
        scored.push((item, phi, score));
    }
    scored.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| b.0.time.cmp(&a.0.time)).then_with(|| a.0.id.cmp(&b.0.id)));
    scored.truncate(top_k);

    let ranked: Vec<RankedItem> = scored
        .iter()
        .map(|(item, phi, score)| {
            let (evidence_path, path_flag) = evidence(ctx.graph, &item.id, &targets);
            RankedItem {
                news_id: item.id.clone(),
                score: *score,
                features: phi.clone(),
                evidence_path,
                path_flag,
                headline: item.headline.clone(),
                time: item.time,
            }
        })
        .collect();
    let summary = if ranked.is_empty() {
        format!("No {} news in the {} window; nothing to rank.", intent.category, intent.horizon.window_phrase())
    } else {
        let picked: Vec<&NewsItem> = scored.iter().map(|(i, _, _)| *i).collect();
        ctx.summary.summarize(intent, &ranked, &picked)?
    };
    let id = crate::report::digest(&(intent, ctx.now, ranked.iter().map(|r| &r.news_id).collect::<Vec<_>>()))[..16].to_string();
    Ok(Recommendation { id, summary, ranked_items: ranked, intent_echo: intent.clone(), generated_at: ctx.now, policy_version: 0 })
}
