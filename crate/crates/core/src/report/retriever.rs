use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use super::compose::{Prompt, TimeWindow};
use super::signal::RetrievedItem;
use crate::error::{Error, Result};

/// Web-search style evidence source for report enhancement.
pub trait Retriever: Send + Sync {
    fn retrieve(&self, prompt: &Prompt) -> Result<Vec<RetrievedItem>>;
}

/// Returns nothing; enhancement becomes the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoRetrieval;

impl Retriever for NoRetrieval {
    fn retrieve(&self, _: &Prompt) -> Result<Vec<RetrievedItem>> {
        Ok(Vec::new())
    }
}

/// Serves canned items, keeping those inside the prompt's window.
#[derive(Debug, Clone, Default)]
pub struct FixtureRetriever {
    pub items: Vec<RetrievedItem>,
}

impl FixtureRetriever {
    pub fn new(items: Vec<RetrievedItem>) -> Self {
        FixtureRetriever { items }
    }

    /// Reads a JSON array of `{source, snippet, time, url}`; `time` may be
    /// epoch seconds or an RFC 3339 string.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::StorageUnavailable(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Vec<serde_json::Value> = serde_json::from_str(text)?;
        let mut items = Vec::with_capacity(raw.len());
        for v in raw {
            let field = |k: &str| v.get(k).and_then(|x| x.as_str()).map(str::to_string);
            let time = match v.get("time") {
                Some(serde_json::Value::Number(n)) => n.as_i64(),
                Some(serde_json::Value::String(s)) => crate::news::parse_news_time(s),
                _ => None,
            }
            .ok_or_else(|| Error::MissingField("time".into()))?;
            items.push(RetrievedItem {
                source: field("source").ok_or_else(|| Error::MissingField("source".into()))?,
                snippet: field("snippet").ok_or_else(|| Error::MissingField("snippet".into()))?,
                time,
                url: field("url").unwrap_or_default(),
            });
        }
        Ok(FixtureRetriever { items })
    }
}

impl Retriever for FixtureRetriever {
    fn retrieve(&self, prompt: &Prompt) -> Result<Vec<RetrievedItem>> {
        Ok(self.items.iter().filter(|i| prompt.window.contains(i.time)).cloned().collect())
    }
}

#[derive(Serialize)]
struct RetrieveBody<'a> {
    slots: BTreeMap<&'static str, &'a str>,
    prompt: String,
    window: TimeWindow,
}

/// Remote retriever: `POST {url}` with the prompt slots and window, expects a
/// JSON list of `{source, snippet, time, url}`.
#[derive(Debug, Clone)]
pub struct HttpRetriever {
    pub url: String,
    pub timeout: Duration,
    pub retries: u32,
}

impl HttpRetriever {
    pub fn new(url: impl Into<String>, timeout: Duration, retries: u32) -> Self {
        HttpRetriever { url: url.into(), timeout, retries }
    }
}

impl Retriever for HttpRetriever {
    fn retrieve(&self, prompt: &Prompt) -> Result<Vec<RetrievedItem>> {
        let unavailable = |e: String| Error::ProviderUnavailable { track: "retriever".into(), reason: e };
        let client = reqwest::blocking::Client::builder().timeout(self.timeout).build().map_err(|e| unavailable(e.to_string()))?;
        let body = RetrieveBody { slots: prompt.slots().into_iter().collect(), prompt: prompt.render(), window: prompt.window };
        let mut last = String::new();
        for _ in 0..=self.retries {
            match client.post(&self.url).json(&body).send() {
                Ok(r) if r.status().is_success() => {
                    let text = r.text().map_err(|e| unavailable(e.to_string()))?;
                    return Ok(FixtureRetriever::from_json(&text)?.items);
                }
                Ok(r) => last = format!("HTTP {}", r.status()),
                Err(e) => last = e.to_string(),
            }
        }
        Err(unavailable(last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt(start: i64, end: i64) -> Prompt {
        Prompt {
            asset: "BTC".into(),
            horizon: "Short".into(),
            key_indicators: String::new(),
            sentiment_summary: String::new(),
            top_entities: String::new(),
            risk_notes: String::new(),
            date_range: String::new(),
            confidence_threshold: "0.5".into(),
            window: TimeWindow { start, end },
        }
    }

    #[test]
    fn fixture_window_filter() {
        let r = FixtureRetriever::from_json(
            r#"[{"source":"a","snippet":"x","time":10,"url":"u"},{"source":"b","snippet":"y","time":"1970-01-01T00:01:40Z"}]"#,
        )
        .unwrap();
        assert_eq!(r.retrieve(&prompt(0, 50)).unwrap().len(), 1);
        assert_eq!(r.retrieve(&prompt(0, 100)).unwrap().len(), 2);
        assert!(FixtureRetriever::from_json(r#"[{"source":"a","snippet":"x"}]"#).is_err());
    }

    #[test]
    fn http_unreachable() {
        let r = HttpRetriever::new("http://127.0.0.1:9/retrieve", Duration::from_millis(200), 0);
        assert!(matches!(r.retrieve(&prompt(0, 1)), Err(Error::ProviderUnavailable { .. })));
    }
}
