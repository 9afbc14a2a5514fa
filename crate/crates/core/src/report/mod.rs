//! Four-agent report generation with signal validation, retrieval
//! enhancement and TTL caching.

mod agents;
mod cache;
mod compose;
mod pipeline;
mod retriever;
mod signal;
mod types;

pub use agents::{
    run_market_agent, run_recommendation_agent, run_semantic_agent, run_technical_agent, weighted_vote, FeedItem, RecommendationContext,
    SemanticProvider, SentenceDedupe, UnavailableSemantic, FLAG_CONFLICT, FLAG_PASSTHROUGH, H_BOLLINGER, H_ENTITIES, H_FLOWS, H_LEVELS,
    H_LONG, H_MACD, H_MEDIUM, H_REGULATION, H_RISK, H_RSI, H_SEMANTIC, H_SENTIMENT, H_SHORT, H_SOCIAL, H_TREND,
};
pub use cache::{digest, CacheEntry, CacheKey, ReportCache, TtlPolicy};
pub use compose::{augment, build_prompt, integrate, Prompt, TimeWindow};
pub use pipeline::{ReportInputs, ReportPipeline, ReportRun};
pub use retriever::{FixtureRetriever, HttpRetriever, NoRetrieval, Retriever};
pub use signal::{recency, relevance, score_signal, signal_order, validate_signals, CredibilityTable, RetrievedItem, Signal, SignalPolicy, SignalWeights};
pub use types::{Addition, AgentId, EnhancedReport, PartialReport, Provenance, RawReport, Section, Stance, StanceConflict};
