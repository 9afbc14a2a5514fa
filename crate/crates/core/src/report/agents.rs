use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::types::{AgentId, PartialReport, Section, Stance};
use crate::error::{Error, Result};
use crate::forecast::ForecastSeries;
use crate::indicators::{compute_bundle, IndicatorParams};
use crate::market_data::{CandleSeries, Timestamp};
use crate::news::{NewsItem, Sentiment};
use crate::text::{sentences, token_set};

pub const H_RSI: &str = "Momentum (RSI)";
pub const H_MACD: &str = "MACD";
pub const H_BOLLINGER: &str = "Bollinger Bands";
pub const H_LEVELS: &str = "Support and Resistance";
pub const H_TREND: &str = "Trend and Volume";
pub const H_SENTIMENT: &str = "Sentiment";
pub const H_FLOWS: &str = "Flows";
pub const H_SOCIAL: &str = "Social";
pub const H_REGULATION: &str = "Regulation";
pub const H_ENTITIES: &str = "Key Entities";
pub const H_SHORT: &str = "Short Term (1-4 weeks)";
pub const H_MEDIUM: &str = "Medium Term (1-6 months)";
pub const H_LONG: &str = "Long Term (6+ months)";
pub const H_RISK: &str = "Risk Notes";
pub const H_SEMANTIC: &str = "Semantic Notes";

pub const FLAG_CONFLICT: &str = "conflict";
pub const FLAG_PASSTHROUGH: &str = "passthrough";

/// Zero without a sign, so flat inputs never print as `-0`.
fn unsigned_zero(x: f64) -> f64 {
    x + 0.0
}

/// Technical agent: five indicator sections and a rule-based stance.
///
/// Bullish when the trend is up and RSI < 70, Bearish when the trend is down
/// and RSI > 30, Neutral otherwise. Confidence is the relative price move
/// implied by the trend slope over its lookback, capped at 1.
pub fn run_technical_agent(series: &CandleSeries, params: &IndicatorParams, now: Timestamp) -> Result<PartialReport> {
    let b = compute_bundle(series, params)?;
    let last_close = series.last().map(|c| c.c).unwrap_or_default();
    let rsi = b.rsi.last().unwrap_or(50.0);
    let (macd, signal, hist) = (
        b.macd.macd_line.last().copied().unwrap_or_default(),
        b.macd.signal_line.last().copied().unwrap_or_default(),
        b.macd.histogram.last().copied().unwrap_or_default(),
    );
    let (mid, upper, lower) = (
        b.bollinger.mid.last().copied().unwrap_or_default(),
        b.bollinger.upper.last().copied().unwrap_or_default(),
        b.bollinger.lower.last().copied().unwrap_or_default(),
    );
    let trend = unsigned_zero(b.trend_strength);
    let stance = if trend > 0.0 && rsi < 70.0 {
        Stance::Bullish
    } else if trend < 0.0 && rsi > 30.0 {
        Stance::Bearish
    } else {
        Stance::Neutral
    };
    let confidence = if stance == Stance::Neutral { 0.0 } else { (trend.abs() * params.trend_lookback as f64).min(1.0) };

    let zone = if rsi >= 70.0 {
        "overbought"
    } else if rsi <= 30.0 {
        "oversold"
    } else {
        "neutral"
    };
    let momentum = if hist > 0.0 {
        "positive"
    } else if hist < 0.0 {
        "negative"
    } else {
        "flat"
    };
    let band_pos = if last_close > upper {
        "above the upper band"
    } else if last_close < lower {
        "below the lower band"
    } else {
        "inside the bands"
    };
    let sections = vec![
        Section::new(H_RSI, format!("RSI({}) at {:.2}, {zone} zone.", params.rsi_period, rsi)),
        Section::new(
            H_MACD,
            format!("MACD line {:.4}, signal {:.4}, histogram {:.4}; {momentum} momentum.", unsigned_zero(macd), unsigned_zero(signal), unsigned_zero(hist)),
        ),
        Section::new(H_BOLLINGER, format!("Mid {mid:.4}, upper {upper:.4}, lower {lower:.4}; last close {last_close:.4} {band_pos}.")),
        Section::new(H_LEVELS, format!("Support {:.4} and resistance {:.4} over the last {} bars.", b.support, b.resistance, params.level_lookback)),
        Section::new(
            H_TREND,
            format!("Trend strength {trend:.6} per bar. Volume trend {:.2}%.", unsigned_zero(b.volume_trend * 100.0)),
        ),
    ];
    let metrics = BTreeMap::from([
        ("rsi".to_string(), rsi),
        ("macd".to_string(), macd),
        ("macd_signal".to_string(), signal),
        ("macd_histogram".to_string(), hist),
        ("bollinger_mid".to_string(), mid),
        ("bollinger_upper".to_string(), upper),
        ("bollinger_lower".to_string(), lower),
        ("support".to_string(), b.support),
        ("resistance".to_string(), b.resistance),
        ("trend_strength".to_string(), trend),
        ("volume_trend".to_string(), b.volume_trend),
        ("last_close".to_string(), last_close),
    ]);
    Ok(PartialReport { agent: AgentId::A1, sections, signals_used: Vec::new(), produced_at: now, stance, confidence, metrics, flags: Vec::new() })
}

/// A non-news market observation (fund flow, social post).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedItem {
    pub source: String,
    pub text: String,
    pub time: Timestamp,
    #[serde(default)]
    pub sentiment: Option<Sentiment>,
    /// Signed magnitude, e.g. net inflow.
    #[serde(default)]
    pub value: Option<f64>,
    /// Asset the entry is about; untagged entries are market-wide.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
}

impl FeedItem {
    pub fn concerns(&self, symbol: &str) -> bool {
        self.symbol.as_deref().is_none_or(|s| s.eq_ignore_ascii_case(symbol))
    }
}

const REGULATION_WORDS: [&str; 18] = [
    "sec", "cftc", "regulation", "regulatory", "regulator", "regulators", "lawsuit", "ban", "bans", "compliance", "approval",
    "approves", "approved", "license", "sanctions", "legislation", "court", "enforcement",
];

/// Market agent: sentiment tallies, flows, social, regulation and entities.
/// Stance is the majority label across every labeled item with confidence
/// `|bull - bear| / (bull + bear)`; a tie or no labels gives Neutral 0.
pub fn run_market_agent(news: &[NewsItem], flows: &[FeedItem], social: &[FeedItem], now: Timestamp) -> PartialReport {
    let labels = news.iter().filter_map(|n| n.sentiment).chain(flows.iter().chain(social).filter_map(|f| f.sentiment));
    let (mut bull, mut bear) = (0usize, 0usize);
    for l in labels {
        match l {
            Sentiment::Bullish => bull += 1,
            Sentiment::Bearish => bear += 1,
        }
    }
    let total = bull + bear;
    let (stance, confidence) = match bull.cmp(&bear) {
        _ if total == 0 => (Stance::Neutral, 0.0),
        std::cmp::Ordering::Greater => (Stance::Bullish, (bull - bear) as f64 / total as f64),
        std::cmp::Ordering::Less => (Stance::Bearish, (bear - bull) as f64 / total as f64),
        std::cmp::Ordering::Equal => (Stance::Neutral, 0.0),
    };

    let sentiment = if total == 0 {
        format!("No labeled items among {} news articles.", news.len())
    } else {
        format!("{bull} bullish and {bear} bearish items across {} news articles and {} feed entries.", news.len(), flows.len() + social.len())
    };
    let flows_body = if flows.is_empty() {
        "No flow data.".to_string()
    } else {
        let net: f64 = flows.iter().filter_map(|f| f.value).sum();
        let mut lines = vec![format!("Net flow {:.2} across {} entries.", unsigned_zero(net), flows.len())];
        lines.extend(flows.iter().map(|f| format!("{} ({}).", f.text.trim_end_matches('.'), f.source)));
        lines.join("\n")
    };
    let social_body = if social.is_empty() {
        "No social signals.".to_string()
    } else {
        let b = social.iter().filter(|f| f.sentiment == Some(Sentiment::Bullish)).count();
        let s = social.iter().filter(|f| f.sentiment == Some(Sentiment::Bearish)).count();
        format!("{} posts: {b} bullish, {s} bearish.", social.len())
    };
    let reg: BTreeSet<&str> = REGULATION_WORDS.into_iter().collect();
    let mut regulation: Vec<&NewsItem> = news.iter().filter(|n| token_set(&n.text()).iter().any(|t| reg.contains(t.as_str()))).collect();
    regulation.sort_by(|a, b| b.time.cmp(&a.time).then_with(|| a.id.cmp(&b.id)));
    let regulation_body = if regulation.is_empty() {
        "No regulatory mentions.".to_string()
    } else {
        regulation.iter().map(|n| format!("{} ({}).", n.headline.trim_end_matches('.'), n.source)).collect::<Vec<_>>().join("\n")
    };
    let mut counts: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for e in news.iter().flat_map(|n| n.entities.iter().flatten()) {
        counts.entry(e.canonical_id.as_str()).or_insert((0, e.surface.as_str())).0 += 1;
    }
    let mut ranked: Vec<(&str, usize, &str)> = counts.into_iter().map(|(id, (n, s))| (id, n, s)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let entities_body = ranked.iter().take(5).map(|(_, _, s)| *s).collect::<Vec<_>>().join(", ");

    let sections = vec![
        Section::new(H_SENTIMENT, sentiment),
        Section::new(H_FLOWS, flows_body),
        Section::new(H_SOCIAL, social_body),
        Section::new(H_REGULATION, regulation_body),
        Section::new(H_ENTITIES, entities_body),
    ];
    let metrics = BTreeMap::from([
        ("bullish".to_string(), bull as f64),
        ("bearish".to_string(), bear as f64),
        ("regulation_mentions".to_string(), regulation.len() as f64),
    ]);
    PartialReport { agent: AgentId::A2, sections, signals_used: Vec::new(), produced_at: now, stance, confidence, metrics, flags: Vec::new() }
}

/// Extra context for the recommendation agent.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecommendationContext<'a> {
    pub symbol: &'a str,
    pub forecast: Option<&'a ForecastSeries>,
}

/// Confidence-weighted vote. Exact ties between opposing stances give
/// Neutral with a conflict marker.
pub fn weighted_vote(votes: &[(Stance, f64)]) -> (Stance, f64, bool) {
    let net: f64 = votes.iter().map(|(s, c)| s.sign() * c).sum();
    let mass: f64 = votes.iter().filter(|(s, _)| *s != Stance::Neutral).map(|(_, c)| c).sum();
    let opposed = votes.iter().any(|v| v.0 == Stance::Bullish) && votes.iter().any(|v| v.0 == Stance::Bearish);
    let conf = if mass > 0.0 { (net.abs() / mass).min(1.0) } else { 0.0 };
    if net > 0.0 {
        (Stance::Bullish, conf, false)
    } else if net < 0.0 {
        (Stance::Bearish, conf, false)
    } else {
        (Stance::Neutral, 0.0, opposed)
    }
}

fn levels(stance: Stance, support: f64, resistance: f64, stretch: f64) -> (f64, f64) {
    let range = (resistance - support).max(0.0);
    match stance {
        Stance::Bullish => (support, resistance + stretch * range),
        Stance::Bearish => (resistance, (support - stretch * range).max(0.0)),
        Stance::Neutral => (support, resistance),
    }
}

/// Recommendation agent: one section per horizon plus risk notes.
pub fn run_recommendation_agent(
    r1: Option<&PartialReport>,
    r2: Option<&PartialReport>,
    context: &RecommendationContext<'_>,
    now: Timestamp,
) -> Result<PartialReport> {
    let r1 = r1.ok_or_else(|| Error::MissingInput("A1".into()))?;
    let r2 = r2.ok_or_else(|| Error::MissingInput("A2".into()))?;
    let (stance, confidence, conflict) = weighted_vote(&[(r1.stance, r1.confidence), (r2.stance, r2.confidence)]);
    let metric = |k: &str| r1.metrics.get(k).copied();
    let support = metric("support").ok_or_else(|| Error::MissingInput("A1 support level".into()))?;
    let resistance = metric("resistance").ok_or_else(|| Error::MissingInput("A1 resistance level".into()))?;

    let mut sections = Vec::new();
    for (heading, stretch) in [(H_SHORT, 0.0), (H_MEDIUM, 0.5), (H_LONG, 1.0)] {
        let (entry, exit) = levels(stance, support, resistance, stretch);
        let mut body = match stance {
            Stance::Neutral => format!("Neutral stance. Range-bound between {entry:.4} and {exit:.4}."),
            s => format!("{s} stance. Entry near {entry:.4}, exit near {exit:.4}."),
        };
        if heading == H_SHORT {
            if let Some(f) = context.forecast.and_then(|f| f.steps.last().map(|c| (c.c, f.horizon))) {
                body.push_str(&format!(" Fused forecast targets {:.4} in {} steps.", f.0, f.1));
            }
        }
        sections.push(Section::new(heading, body));
    }

    let mut risks = Vec::new();
    if conflict {
        risks.push("Technical and market stances conflict with equal weight.".to_string());
    }
    if let Some(rsi) = metric("rsi") {
        if rsi >= 70.0 {
            risks.push(format!("RSI {rsi:.2} signals overbought conditions."));
        } else if rsi <= 30.0 {
            risks.push(format!("RSI {rsi:.2} signals oversold conditions."));
        }
    }
    if let (Some(u), Some(l), Some(m)) = (metric("bollinger_upper"), metric("bollinger_lower"), metric("bollinger_mid")) {
        if m != 0.0 {
            risks.push(format!("Bollinger width {:.2}% of price.", (u - l) / m * 100.0));
        }
    }
    if let Some(n) = r2.metrics.get("regulation_mentions").filter(|n| **n > 0.0) {
        risks.push(format!("{n} regulatory headlines in the window."));
    }
    if risks.is_empty() {
        risks.push("No elevated risk markers.".to_string());
    }
    sections.push(Section::new(H_RISK, risks.join("\n")));

    let mut metrics = BTreeMap::from([("support".to_string(), support), ("resistance".to_string(), resistance)]);
    if let Some(c) = context.forecast.and_then(|f| f.steps.last()) {
        metrics.insert("forecast_close".to_string(), c.c);
    }
    let flags = if conflict { vec![FLAG_CONFLICT.to_string()] } else { Vec::new() };
    Ok(PartialReport { agent: AgentId::A3, sections, signals_used: Vec::new(), produced_at: now, stance, confidence, metrics, flags })
}

/// Rewrites the combined sections of the first three agents.
pub trait SemanticProvider: Send + Sync {
    fn refine(&self, sections: &[Section]) -> Result<Vec<Section>>;
}

/// Deterministic refinement: drops sentences already seen earlier in the
/// report and keeps heading order.
#[derive(Debug, Clone, Copy, Default)]
pub struct SentenceDedupe;

impl SemanticProvider for SentenceDedupe {
    fn refine(&self, sections: &[Section]) -> Result<Vec<Section>> {
        let mut seen = BTreeSet::new();
        Ok(sections
            .iter()
            .map(|s| {
                let lines: Vec<String> = s
                    .body
                    .lines()
                    .map(|line| sentences(line).into_iter().filter(|x| seen.insert(x.clone())).collect::<Vec<_>>().join(" "))
                    .filter(|l| !l.is_empty())
                    .collect();
                Section::new(s.heading.clone(), lines.join("\n"))
            })
            .collect())
    }
}

/// A provider that is always down.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnavailableSemantic;

impl SemanticProvider for UnavailableSemantic {
    fn refine(&self, _: &[Section]) -> Result<Vec<Section>> {
        Err(Error::ProviderUnavailable { track: "semantic".into(), reason: "not configured".into() })
    }
}

/// Semantic agent. Takes the stance of the most confident input (earliest on
/// ties) so it never introduces a new one. When the provider is down the
/// output is the concatenated input sections, flagged `passthrough`.
pub fn run_semantic_agent(
    r1: &PartialReport,
    r2: &PartialReport,
    r3: &PartialReport,
    provider: &dyn SemanticProvider,
    now: Timestamp,
) -> PartialReport {
    let inputs = [r1, r2, r3];
    let mut ordered = inputs;
    ordered.sort_by_key(|r| r.agent);
    let combined: Vec<Section> = ordered.iter().flat_map(|r| r.sections.iter().cloned()).collect();
    let leader = inputs.iter().fold(inputs[0], |best, r| if r.confidence > best.confidence { r } else { best });
    let (stance, confidence) = (leader.stance, leader.confidence);
    match provider.refine(&combined) {
        Ok(mut sections) => {
            let before: usize = combined.iter().map(|s| sentences(&s.body).len()).sum();
            let after: usize = sections.iter().map(|s| sentences(&s.body).len()).sum();
            let stances =
                ordered.iter().map(|r| format!("{} {} ({:.2})", r.agent.role(), r.stance, r.confidence)).collect::<Vec<_>>().join("; ");
            sections.push(Section::new(
                H_SEMANTIC,
                format!("Stances: {stances}.\n{} repeated sentences removed.", before.saturating_sub(after)),
            ));
            PartialReport { agent: AgentId::A4, sections, signals_used: Vec::new(), produced_at: now, stance, confidence, metrics: BTreeMap::new(), flags: Vec::new() }
        }
        Err(_) => PartialReport {
            agent: AgentId::A4,
            sections: combined,
            signals_used: Vec::new(),
            produced_at: now,
            stance,
            confidence,
            metrics: BTreeMap::new(),
            flags: vec![FLAG_PASSTHROUGH.to_string()],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{Candle, Resolution};
    use crate::news::{Entity, EntityKind};

    pub(crate) fn series(closes: impl IntoIterator<Item = f64>) -> CandleSeries {
        let candles = closes.into_iter().enumerate().map(|(i, c)| Candle::new(i as i64 * 86_400, c, c + 1.0, c - 1.0, c, 100.0)).collect();
        CandleSeries::new("BTC", Resolution::OneDay, candles).unwrap()
    }

    fn news(id: &str, headline: &str, sentiment: Option<Sentiment>) -> NewsItem {
        NewsItem {
            id: id.into(),
            headline: headline.into(),
            body: String::new(),
            time: 0,
            source: "wire".into(),
            url: None,
            tokens_mentioned: Default::default(),
            sentiment,
            sentiment_score: None,
            entities: Some(vec![Entity::new("BTC", EntityKind::Crypto)]),
        }
    }

    pub(crate) fn partial(agent: AgentId, stance: Stance, confidence: f64) -> PartialReport {
        PartialReport {
            agent,
            sections: vec![Section::new(format!("{agent} body"), "Shared sentence. Own sentence.")],
            signals_used: Vec::new(),
            produced_at: 0,
            stance,
            confidence,
            metrics: BTreeMap::from([("support".into(), 90.0), ("resistance".into(), 110.0)]),
            flags: Vec::new(),
        }
    }

    #[test]
    fn technical_rising_and_flat() {
        // Mild alternating rise keeps RSI below 70.
        let rising = run_technical_agent(&series((0..60).map(|i| 100.0 + i as f64 * 0.5 + if i % 2 == 0 { 1.0 } else { -1.0 })), &IndicatorParams::default(), 0).unwrap();
        assert!(rising.metrics["rsi"] < 70.0);
        assert_eq!(rising.stance, Stance::Bullish);
        let flat = run_technical_agent(&series(std::iter::repeat_n(100.0, 60)), &IndicatorParams::default(), 0).unwrap();
        assert_eq!(flat.stance, Stance::Neutral);
        assert!(flat.section(H_TREND).unwrap().body.starts_with("Trend strength 0.000000"));
        let headings: Vec<_> = flat.sections.iter().map(|s| s.heading.as_str()).collect();
        assert_eq!(headings, vec![H_RSI, H_MACD, H_BOLLINGER, H_LEVELS, H_TREND]);
        assert!(matches!(run_technical_agent(&series([10.0; 5]), &IndicatorParams::default(), 0), Err(Error::InsufficientHistory { .. })));
    }

    #[test]
    fn market_majority() {
        let items = [
            news("1", "a", Some(Sentiment::Bullish)),
            news("2", "b", Some(Sentiment::Bullish)),
            news("3", "c", Some(Sentiment::Bullish)),
            news("4", "d", Some(Sentiment::Bearish)),
        ];
        let r = run_market_agent(&items, &[], &[], 0);
        assert_eq!(r.stance, Stance::Bullish);
        assert_eq!(r.confidence, 0.5);
        let empty = run_market_agent(&[], &[], &[], 0);
        assert_eq!((empty.stance, empty.confidence), (Stance::Neutral, 0.0));
        assert_eq!(empty.section(H_ENTITIES).unwrap().body, "");
        let reg = run_market_agent(&[news("5", "SEC opens lawsuit against exchange", None)], &[], &[], 0);
        assert!(reg.section(H_REGULATION).unwrap().body.contains("SEC opens lawsuit"));
        assert_eq!(reg.section(H_ENTITIES).unwrap().body, "BTC");
    }

    #[test]
    fn recommendation_votes() {
        let ctx = RecommendationContext::default();
        let both = run_recommendation_agent(Some(&partial(AgentId::A1, Stance::Bullish, 0.4)), Some(&partial(AgentId::A2, Stance::Bullish, 0.6)), &ctx, 0).unwrap();
        assert_eq!(both.stance, Stance::Bullish);
        for h in [H_SHORT, H_MEDIUM, H_LONG] {
            assert!(both.section(h).unwrap().body.starts_with("Bullish"));
        }
        let weighted = run_recommendation_agent(Some(&partial(AgentId::A1, Stance::Bullish, 0.9)), Some(&partial(AgentId::A2, Stance::Bearish, 0.1)), &ctx, 0).unwrap();
        assert_eq!(weighted.stance, Stance::Bullish);
        let tie = run_recommendation_agent(Some(&partial(AgentId::A1, Stance::Bullish, 0.5)), Some(&partial(AgentId::A2, Stance::Bearish, 0.5)), &ctx, 0).unwrap();
        assert_eq!(tie.stance, Stance::Neutral);
        assert!(tie.has_flag(FLAG_CONFLICT));
        assert!(matches!(run_recommendation_agent(None, Some(&partial(AgentId::A2, Stance::Bullish, 0.5)), &ctx, 0), Err(Error::MissingInput(_))));
        assert!(both.section(H_LONG).unwrap().body.contains("exit near 130.0000"));
    }

    #[test]
    fn semantic_dedupe_and_passthrough() {
        let (r1, r2, r3) = (partial(AgentId::A1, Stance::Bullish, 0.3), partial(AgentId::A2, Stance::Bearish, 0.9), partial(AgentId::A3, Stance::Neutral, 0.0));
        let r4 = run_semantic_agent(&r1, &r2, &r3, &SentenceDedupe, 0);
        assert_eq!(r4.sections[0].body, "Shared sentence. Own sentence.");
        assert_eq!(r4.sections[1].body, "");
        assert!(r4.section(H_SEMANTIC).unwrap().body.contains("4 repeated sentences removed"));
        assert_eq!(r4.stance, Stance::Bearish);
        let down = run_semantic_agent(&r1, &r2, &r3, &UnavailableSemantic, 0);
        assert!(down.has_flag(FLAG_PASSTHROUGH));
        let concat: Vec<_> = [&r1, &r2, &r3].iter().flat_map(|r| r.sections.clone()).collect();
        assert_eq!(down.sections, concat);
    }
}
