//! Intent parsing, query planning, graph-grounded ranking and the online
//! feedback policy.

mod engine;
mod feedback;
mod intent;
mod policy;

pub use engine::{
    features, recommend, sentiment_match, ExtractiveSummary, RankedItem, RecommendContext, Recommendation, SummaryProvider, MAX_PATH_HOPS,
    PATH_NONE, PATH_TRUNCATED,
};
pub use feedback::{replay, FeedbackEvent, FeedbackLog, FeedbackLoop, PolicySnapshot, RecommendationStore, FEEDBACK_SCHEMA_VERSION};
pub use intent::{parse_intent, plan_queries, Categories, Category, Intent, IntentDefaults, IntentProvider, IntentRequest, KeywordIntent, Risk};
pub use policy::{log_loss, logistic, score_candidate, update_policy, PolicyWeights, FEATURE_DIM, FEATURE_NAMES};
