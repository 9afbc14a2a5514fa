use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::market_data::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sentiment {
    Bullish,
    Bearish,
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sentiment::Bullish => "Bullish",
            Sentiment::Bearish => "Bearish",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    #[serde(rename = "ORG")]
    Org,
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "EVT")]
    Evt,
    #[serde(rename = "CRYPTO")]
    Crypto,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Org => "ORG",
            EntityKind::Per => "PER",
            EntityKind::Evt => "EVT",
            EntityKind::Crypto => "CRYPTO",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub surface: String,
    pub kind: EntityKind,
    pub canonical_id: String,
}

impl Entity {
    pub fn new(surface: impl Into<String>, kind: EntityKind) -> Self {
        let surface = surface.into();
        let canonical_id = canonicalize(&surface);
        Entity { surface, kind, canonical_id }
    }
}

/// Lowercase, inner whitespace collapsed to single spaces.
pub fn canonicalize(surface: &str) -> String {
    surface.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// One structured news article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsItem {
    pub id: String,
    pub headline: String,
    #[serde(default)]
    pub body: String,
    pub time: Timestamp,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default)]
    pub tokens_mentioned: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<Sentiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entities: Option<Vec<Entity>>,
}

impl NewsItem {
    /// Content-derived id: first 12 hex chars of SHA-256 over source, time and
    /// headline.
    pub fn stable_id(source: &str, time: Timestamp, headline: &str) -> String {
        let mut h = Sha256::new();
        h.update(source.as_bytes());
        h.update([0]);
        h.update(time.to_le_bytes());
        h.update([0]);
        h.update(headline.as_bytes());
        hex::encode(&h.finalize()[..6])
    }

    pub fn text(&self) -> String {
        if self.body.is_empty() {
            self.headline.clone()
        } else {
            format!("{}. {}", self.headline.trim_end_matches('.'), self.body)
        }
    }

    pub fn set_sentiment(&mut self, label: Sentiment, score: f64) {
        self.sentiment = Some(label);
        self.sentiment_score = Some(score);
    }
}
