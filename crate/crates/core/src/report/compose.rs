use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::agents::{H_BOLLINGER, H_ENTITIES, H_LEVELS, H_MACD, H_RISK, H_RSI, H_SENTIMENT, H_TREND};
use super::signal::Signal;
use super::types::{Addition, AgentId, EnhancedReport, PartialReport, Provenance, RawReport, Section, Stance, StanceConflict};
use crate::error::{Error, Result};
use crate::horizon::Horizon;
use crate::market_data::Timestamp;
use crate::text::{first_sentence, token_set};

/// Assembles the four partial reports in fixed agent order. Sections the
/// semantic agent rewrote replace the originals (provenance lists both
/// agents); its other sections are appended last. The overall stance comes
/// from the most confident agent, and every opposing stance it overrules is
/// recorded as a conflict.
pub fn integrate(partials: &[PartialReport], symbol: &str, horizon: Horizon, now: Timestamp) -> Result<RawReport> {
    let get = |id: AgentId| partials.iter().find(|p| p.agent == id).ok_or_else(|| Error::MissingPartial(id.to_string()));
    let (r1, r2, r3, r4) = (get(AgentId::A1)?, get(AgentId::A2)?, get(AgentId::A3)?, get(AgentId::A4)?);

    let refined: BTreeMap<&str, &Section> = r4.sections.iter().map(|s| (s.heading.as_str(), s)).collect();
    let mut sections = Vec::new();
    let mut provenance = Provenance::default();
    for r in [r1, r2, r3] {
        for s in &r.sections {
            let mut owners = vec![r.agent.to_string()];
            let section = match refined.get(s.heading.as_str()) {
                Some(newer) => {
                    owners.push(AgentId::A4.to_string());
                    (*newer).clone()
                }
                None => s.clone(),
            };
            provenance.sections.insert(section.heading.clone(), owners);
            sections.push(section);
        }
    }
    for s in &r4.sections {
        if !provenance.sections.contains_key(&s.heading) {
            provenance.sections.insert(s.heading.clone(), vec![AgentId::A4.to_string()]);
            sections.push(s.clone());
        }
    }

    let ordered = [r1, r2, r3, r4];
    let winner = ordered.iter().fold(ordered[0], |best, r| if r.confidence > best.confidence { r } else { best });
    for r in ordered {
        if r.agent != winner.agent && r.stance != Stance::Neutral && r.stance != winner.stance {
            provenance.conflicts.push(StanceConflict {
                winner: winner.agent,
                winner_stance: winner.stance,
                winner_confidence: winner.confidence,
                overruled: r.agent,
                overruled_stance: r.stance,
                overruled_confidence: r.confidence,
            });
        }
    }
    Ok(RawReport {
        symbol: symbol.to_string(),
        horizon,
        sections,
        provenance,
        stance: winner.stance,
        confidence: winner.confidence,
        generated_at: now,
    })
}

/// Time span a prompt covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeWindow {
    pub fn ending_at(end: Timestamp, horizon: Horizon) -> Self {
        Self::spanning(end, horizon.news_window())
    }

    pub fn spanning(end: Timestamp, span_secs: i64) -> Self {
        TimeWindow { start: end - span_secs, end }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        (self.start..=self.end).contains(&t)
    }
}

fn day(t: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(t, 0).map_or_else(|| t.to_string(), |d| d.format("%Y-%m-%d").to_string())
}

/// Eight named context slots; empty strings are allowed, missing slots are not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub asset: String,
    pub horizon: String,
    pub key_indicators: String,
    pub sentiment_summary: String,
    pub top_entities: String,
    pub risk_notes: String,
    pub date_range: String,
    pub confidence_threshold: String,
    pub window: TimeWindow,
}

impl Prompt {
    pub const SLOT_NAMES: [&'static str; 8] =
        ["asset", "horizon", "key_indicators", "sentiment_summary", "top_entities", "risk_notes", "date_range", "confidence_threshold"];

    pub fn slots(&self) -> [(&'static str, &str); 8] {
        [
            ("asset", &self.asset),
            ("horizon", &self.horizon),
            ("key_indicators", &self.key_indicators),
            ("sentiment_summary", &self.sentiment_summary),
            ("top_entities", &self.top_entities),
            ("risk_notes", &self.risk_notes),
            ("date_range", &self.date_range),
            ("confidence_threshold", &self.confidence_threshold),
        ]
    }

    /// Search text for relevance scoring: asset, entities and indicators.
    pub fn query(&self) -> String {
        [self.asset.as_str(), self.top_entities.as_str(), self.sentiment_summary.as_str(), self.key_indicators.as_str()]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Instruction text handed to a retriever.
    pub fn render(&self) -> String {
        format!(
            "Find recent, verifiable market information about {asset} for a {horizon}-horizon report.\n\
             Indicators: {ind}\n\
             Sentiment: {sent}\n\
             Entities: {ent}\n\
             Risks: {risk}\n\
             Only consider material dated {range}. Skip items below confidence {gamma}.\n\
             Answer as a JSON list of objects with fields source, snippet, time, url.\n",
            asset = self.asset,
            horizon = self.horizon,
            ind = self.key_indicators,
            sent = self.sentiment_summary,
            ent = self.top_entities,
            risk = self.risk_notes.replace('\n', " "),
            range = self.date_range,
            gamma = self.confidence_threshold,
        )
    }
}

/// Fills the prompt slots from the raw report: indicators are the first
/// sentence of each technical section, sentiment and entities come from the
/// market sections, risks from the recommendation agent. `gamma` is written
/// as given.
pub fn build_prompt(raw: &RawReport, gamma: f64, window: TimeWindow) -> Prompt {
    let body = |h: &str| raw.section(h).map(|s| s.body.clone()).filter(|b| !b.trim().is_empty()).unwrap_or_else(|| "none noted.".into());
    let key_indicators = [H_RSI, H_MACD, H_BOLLINGER, H_LEVELS, H_TREND]
        .iter()
        .filter_map(|h| raw.section(h))
        .map(|s| first_sentence(&s.body))
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    Prompt {
        asset: raw.symbol.clone(),
        horizon: raw.horizon.to_string(),
        key_indicators,
        sentiment_summary: body(H_SENTIMENT),
        top_entities: body(H_ENTITIES),
        risk_notes: body(H_RISK),
        date_range: format!("{} to {}", day(window.start), day(window.end)),
        confidence_threshold: gamma.to_string(),
        window,
    }
}

/// Appends each signal to the section whose body shares the most tokens
/// with it (earliest section on ties) as a bold addition with its source.
/// Existing text is never modified.
pub fn augment(raw: &RawReport, retrieved: &[Signal]) -> EnhancedReport {
    let bodies: Vec<_> = raw.sections.iter().map(|s| token_set(&s.body)).collect();
    let mut sections = raw.sections.clone();
    let mut provenance = raw.provenance.clone();
    let mut additions = Vec::new();
    for signal in retrieved {
        if sections.is_empty() {
            break;
        }
        let words = token_set(&signal.snippet);
        let overlap = |i: usize| bodies[i].intersection(&words).count();
        let best = (0..sections.len()).fold(0, |b, i| if overlap(i) > overlap(b) { i } else { b });
        let text = format!("**{}** ({}, {})", signal.snippet.trim(), signal.source, day(signal.time));
        let target = &mut sections[best];
        if !target.body.is_empty() {
            target.body.push_str("\n\n");
        }
        target.body.push_str(&text);
        provenance.sections.entry(target.heading.clone()).or_default().push(format!("signal:{}", signal.id()));
        additions.push(Addition { section: target.heading.clone(), text, signal: signal.id() });
    }
    EnhancedReport {
        symbol: raw.symbol.clone(),
        horizon: raw.horizon,
        sections,
        provenance,
        stance: raw.stance,
        confidence: raw.confidence,
        generated_at: raw.generated_at,
        additions,
        enhancement_sources: retrieved.to_vec(),
    }
}
