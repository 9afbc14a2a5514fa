use std::collections::BTreeMap;
use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use super::types::ForecastSeries;
use crate::error::{Error, Result};
use crate::market_data::{Resolution, Timestamp};
use crate::news::NewsItem;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryTemplate {
    pub up: String,
    pub down: String,
    pub flat: String,
    pub body: String,
    pub news_header: String,
    pub news_item: String,
}

/// Named summary templates. Placeholders are `{name}`; unknown ones are left
/// untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    templates: BTreeMap<String, SummaryTemplate>,
}

static BUILTIN: LazyLock<TemplateSet> =
    LazyLock::new(|| TemplateSet::from_toml(include_str!("../../data/summary_templates.toml")).expect("builtin templates"));

impl TemplateSet {
    pub fn builtin() -> &'static TemplateSet {
        &BUILTIN
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let templates = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        Ok(TemplateSet { templates })
    }

    pub fn get(&self, name: &str) -> Result<&SummaryTemplate> {
        self.templates.get(name).ok_or_else(|| Error::MissingTemplate(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}

/// Inputs of [`render_summary`]. Metrics are `None` when no realized prices
/// exist yet.
#[derive(Debug, Clone, Copy)]
pub struct SummaryInput<'a> {
    pub symbol: &'a str,
    pub resolution: Resolution,
    pub issued_at: Timestamp,
    pub forecast: &'a ForecastSeries,
    /// Last observed close; falls back to the first forecast close.
    pub anchor_close: Option<f64>,
    pub alpha: f64,
    pub win_rate: Option<f64>,
    pub accuracy: Option<f64>,
    pub news: &'a [NewsItem],
}

fn fill(template: &str, values: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (key, value) in values {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

fn fmt_time(t: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(t, 0).map_or_else(|| t.to_string(), |d| d.format("%Y-%m-%d %H:%M UTC").to_string())
}

fn fmt4(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

/// Fills the named template. Direction comes from the net change between the
/// anchor and the final forecast close; the news section lists the three most
/// recent headlines and is left out entirely when there is no news.
pub fn render_summary(input: &SummaryInput<'_>, templates: &TemplateSet, name: &str) -> Result<String> {
    let tpl = templates.get(name)?;
    let last = input.forecast.steps.last().ok_or(Error::HorizonMismatch)?.c;
    let anchor = input.anchor_close.unwrap_or(input.forecast.steps[0].c);
    let change = last - anchor;
    let direction = if change > 0.0 {
        &tpl.up
    } else if change < 0.0 {
        &tpl.down
    } else {
        &tpl.flat
    };
    let change_pct = if anchor != 0.0 { change / anchor * 100.0 } else { 0.0 };
    let mut text = fill(
        &tpl.body,
        &[
            ("symbol", input.symbol.to_string()),
            ("resolution", input.resolution.to_string()),
            ("horizon", input.forecast.horizon.to_string()),
            ("issued", fmt_time(input.issued_at)),
            ("direction", direction.clone()),
            ("anchor", format!("{anchor:.4}")),
            ("target", format!("{last:.4}")),
            ("change_pct", format!("{change_pct:+.4}")),
            ("alpha", format!("{:.4}", input.alpha)),
            ("win_rate", fmt4(input.win_rate)),
            ("accuracy", fmt4(input.accuracy)),
        ],
    );
    if !input.news.is_empty() {
        let mut news: Vec<&NewsItem> = input.news.iter().collect();
        news.sort_by(|a, b| b.time.cmp(&a.time).then_with(|| a.id.cmp(&b.id)));
        text.push_str("\n\n");
        text.push_str(&tpl.news_header);
        for item in news.into_iter().take(3) {
            text.push('\n');
            text.push_str(&fill(
                &tpl.news_item,
                &[("headline", item.headline.clone()), ("source", item.source.clone()), ("time", fmt_time(item.time))],
            ));
        }
    }
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{Candle, Track};

    fn forecast(closes: &[f64]) -> ForecastSeries {
        let steps = closes.iter().enumerate().map(|(i, &c)| Candle::new(86_400 * (i as i64 + 1), c, c, c, c, 1.0)).collect();
        ForecastSeries::new(steps, Track::Fused)
    }

    fn news(id: &str, t: Timestamp) -> NewsItem {
        NewsItem {
            id: id.into(),
            headline: format!("headline {id}"),
            body: String::new(),
            time: t,
            source: "wire".into(),
            url: None,
            tokens_mentioned: Default::default(),
            sentiment: None,
            sentiment_score: None,
            entities: None,
        }
    }

    fn input<'a>(f: &'a ForecastSeries, news: &'a [NewsItem]) -> SummaryInput<'a> {
        SummaryInput {
            symbol: "BTC",
            resolution: Resolution::OneDay,
            issued_at: 0,
            forecast: f,
            anchor_close: Some(100.0),
            alpha: 0.5,
            win_rate: Some(0.5),
            accuracy: Some(0.98765),
            news,
        }
    }

    #[test]
    fn direction_tokens() {
        let t = TemplateSet::builtin();
        let up = forecast(&[101.0, 102.0]);
        assert!(render_summary(&input(&up, &[]), t, "default").unwrap().contains("upward"));
        let down = forecast(&[99.0, 98.0]);
        assert!(render_summary(&input(&down, &[]), t, "default").unwrap().contains("downward"));
        let flat = forecast(&[100.0, 100.0]);
        assert!(render_summary(&input(&flat, &[]), t, "default").unwrap().contains("sideways"));
    }

    #[test]
    fn empty_news_omits_section() {
        let f = forecast(&[101.0, 102.0]);
        let text = render_summary(&input(&f, &[]), TemplateSet::builtin(), "default").unwrap();
        assert!(!text.contains("headlines"));
        assert!(!text.contains('{'));
        assert!(text.contains("0.9877"));
    }

    #[test]
    fn top_three_by_recency() {
        let f = forecast(&[101.0]);
        let items = [news("a", 10), news("b", 40), news("c", 30), news("d", 20)];
        let text = render_summary(&input(&f, &items), TemplateSet::builtin(), "default").unwrap();
        let pos = |s: &str| text.find(s);
        assert!(pos("headline b") < pos("headline c") && pos("headline c") < pos("headline d"));
        assert!(pos("headline a").is_none());
    }

    #[test]
    fn missing_template() {
        let f = forecast(&[101.0]);
        assert!(matches!(render_summary(&input(&f, &[]), TemplateSet::builtin(), "nope"), Err(Error::MissingTemplate(_))));
    }

    #[test]
    fn deterministic() {
        let f = forecast(&[101.0, 99.5]);
        let items = [news("a", 10)];
        let a = render_summary(&input(&f, &items), TemplateSet::builtin(), "default").unwrap();
        let b = render_summary(&input(&f, &items), TemplateSet::builtin(), "default").unwrap();
        assert_eq!(a, b);
    }
}
