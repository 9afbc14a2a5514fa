use std::collections::BTreeSet;
use std::sync::LazyLock;

use serde::Deserialize;

use super::item::{NewsItem, Sentiment};
use crate::error::Result;
use crate::text::tokens;

/// Scores text in `[0, 1]`; higher means more bullish.
pub trait SentimentProvider: Send + Sync {
    fn score(&self, item: &NewsItem) -> Result<f64>;
}

/// `Bullish` iff `score > tau`.
pub fn label(score: f64, tau: f64) -> Sentiment {
    if score > tau {
        Sentiment::Bullish
    } else {
        Sentiment::Bearish
    }
}

pub fn classify_sentiment(item: &NewsItem, tau: f64, provider: &dyn SentimentProvider) -> Result<(Sentiment, f64)> {
    let score = provider.score(item)?;
    Ok((label(score, tau), score))
}

#[derive(Debug, Clone, Deserialize)]
pub struct Lexicon {
    pub version: u32,
    pub bullish: BTreeSet<String>,
    pub bearish: BTreeSet<String>,
}

static BUILTIN: LazyLock<Lexicon> =
    LazyLock::new(|| serde_json::from_str(include_str!("../../data/lexicon.json")).expect("bundled lexicon is valid JSON"));

impl Lexicon {
    pub fn builtin() -> &'static Lexicon {
        &BUILTIN
    }

    /// `(bull - bear + n) / (2n)` over the `n` word tokens of `text`; 0.5 for
    /// empty text.
    pub fn score_text(&self, text: &str) -> f64 {
        let toks = tokens(text);
        if toks.is_empty() {
            return 0.5;
        }
        let bull = toks.iter().filter(|t| self.bullish.contains(*t)).count() as f64;
        let bear = toks.iter().filter(|t| self.bearish.contains(*t)).count() as f64;
        let n = toks.len() as f64;
        (bull - bear + n) / (2.0 * n)
    }
}

/// Deterministic lexicon scorer.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconSentiment;

impl SentimentProvider for LexiconSentiment {
    fn score(&self, item: &NewsItem) -> Result<f64> {
        Ok(Lexicon::builtin().score_text(&item.text()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(headline: &str, body: &str) -> NewsItem {
        NewsItem {
            id: "x".into(),
            headline: headline.into(),
            body: body.into(),
            time: 0,
            source: "s".into(),
            url: None,
            tokens_mentioned: Default::default(),
            sentiment: None,
            sentiment_score: None,
            entities: None,
        }
    }

    struct Fixed(f64);
    impl SentimentProvider for Fixed {
        fn score(&self, _: &NewsItem) -> Result<f64> {
            Ok(self.0)
        }
    }

    #[test]
    fn threshold_is_strict() {
        assert_eq!(classify_sentiment(&item("a", ""), 0.5, &Fixed(0.5)).unwrap().0, Sentiment::Bearish);
        assert_eq!(classify_sentiment(&item("a", ""), 0.5, &Fixed(0.5000001)).unwrap().0, Sentiment::Bullish);
    }

    #[test]
    fn all_bullish_text() {
        let (l, s) = classify_sentiment(&item("Rally surges", "gains soar"), 0.5, &LexiconSentiment).unwrap();
        assert_eq!((l, s), (Sentiment::Bullish, 1.0));
    }

    #[test]
    fn hand_scored_fixture() {
        // "Bitcoin rallies as ETF inflows surge" → 6 tokens, 3 bullish.
        let s = Lexicon::builtin().score_text("Bitcoin rallies as ETF inflows surge");
        assert!((s - 9.0 / 12.0).abs() < 1e-15);
        // "Exchange hacked, prices plunge" → 4 tokens, 2 bearish.
        let s = Lexicon::builtin().score_text("Exchange hacked, prices plunge");
        assert!((s - 2.0 / 8.0).abs() < 1e-15);
        assert_eq!(Lexicon::builtin().score_text(""), 0.5);
    }
}
