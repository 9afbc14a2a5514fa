use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::signal::Signal;
use crate::horizon::Horizon;
use crate::market_data::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentId {
    A1,
    A2,
    A3,
    A4,
}

impl AgentId {
    pub const ALL: [AgentId; 4] = [AgentId::A1, AgentId::A2, AgentId::A3, AgentId::A4];

    pub const fn role(self) -> &'static str {
        match self {
            AgentId::A1 => "technical",
            AgentId::A2 => "market",
            AgentId::A3 => "recommendation",
            AgentId::A4 => "semantic",
        }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stance {
    Bullish,
    Bearish,
    Neutral,
}

impl Stance {
    pub fn sign(self) -> f64 {
        match self {
            Stance::Bullish => 1.0,
            Stance::Bearish => -1.0,
            Stance::Neutral => 0.0,
        }
    }
}

impl fmt::Display for Stance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub heading: String,
    pub body: String,
}

impl Section {
    pub fn new(heading: impl Into<String>, body: impl Into<String>) -> Self {
        Section { heading: heading.into(), body: body.into() }
    }
}

/// Output of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialReport {
    pub agent: AgentId,
    pub sections: Vec<Section>,
    #[serde(default)]
    pub signals_used: Vec<Signal>,
    pub produced_at: Timestamp,
    pub stance: Stance,
    pub confidence: f64,
    /// Numeric facts other agents build on (levels, indicator values).
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl PartialReport {
    pub fn section(&self, heading: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.heading == heading)
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceConflict {
    pub winner: AgentId,
    pub winner_stance: Stance,
    pub winner_confidence: f64,
    pub overruled: AgentId,
    pub overruled_stance: Stance,
    pub overruled_confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    /// Section heading → contributing agents (`A1`…) and signal ids.
    pub sections: BTreeMap<String, Vec<String>>,
    pub conflicts: Vec<StanceConflict>,
}

/// Integrated report before retrieval enhancement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawReport {
    pub symbol: String,
    pub horizon: Horizon,
    pub sections: Vec<Section>,
    pub provenance: Provenance,
    pub stance: Stance,
    pub confidence: f64,
    pub generated_at: Timestamp,
}

impl RawReport {
    pub fn headings(&self) -> Vec<&str> {
        self.sections.iter().map(|s| s.heading.as_str()).collect()
    }

    pub fn section(&self, heading: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.heading == heading)
    }
}

/// A retrieved signal appended to a section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Addition {
    pub section: String,
    pub text: String,
    pub signal: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancedReport {
    pub symbol: String,
    pub horizon: Horizon,
    pub sections: Vec<Section>,
    pub provenance: Provenance,
    pub stance: Stance,
    pub confidence: f64,
    pub generated_at: Timestamp,
    pub additions: Vec<Addition>,
    pub enhancement_sources: Vec<Signal>,
}

impl EnhancedReport {
    pub fn headings(&self) -> Vec<&str> {
        self.sections.iter().map(|s| s.heading.as_str()).collect()
    }

    pub fn section_body(&self, heading: &str) -> &str {
        self.sections.iter().find(|s| s.heading == heading).map_or("", |s| s.body.as_str())
    }

    /// Plain-text rendering with `## heading` blocks.
    pub fn to_markdown(&self) -> String {
        let mut out = format!("# {} report ({} horizon)\n\nStance: {} ({:.2})\n", self.symbol, self.horizon, self.stance, self.confidence);
        for s in &self.sections {
            out.push_str(&format!("\n## {}\n\n{}\n", s.heading, s.body));
        }
        out
    }
}
