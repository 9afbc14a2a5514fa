use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use serde::Deserialize;

use crate::text::tokens;

/// Alias tables for crypto tickers, organization names and event cues,
/// shipped as a versioned data file.
#[derive(Debug, Clone, Deserialize)]
pub struct Gazetteer {
    pub version: u32,
    pub crypto_aliases: BTreeMap<String, String>,
    pub orgs: Vec<String>,
    pub event_verbs: BTreeMap<String, String>,
    pub event_nouns: Vec<String>,
}

static BUILTIN: LazyLock<Gazetteer> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../../data/gazetteer.json")).expect("bundled gazetteer is valid JSON")
});

impl Gazetteer {
    pub fn builtin() -> &'static Gazetteer {
        &BUILTIN
    }

    /// Ticker for a lowercase alias (`"bitcoin"` → `"BTC"`).
    pub fn ticker(&self, alias: &str) -> Option<&str> {
        self.crypto_aliases.get(&alias.to_lowercase()).map(String::as_str)
    }

    /// Tickers mentioned anywhere in `text`, matching unigrams and bigrams.
    pub fn tickers_in(&self, text: &str) -> BTreeSet<String> {
        let toks = tokens(text);
        let mut out = BTreeSet::new();
        for (i, t) in toks.iter().enumerate() {
            if let Some(tk) = self.ticker(t) {
                out.insert(tk.to_string());
            }
            if let Some(next) = toks.get(i + 1) {
                if let Some(tk) = self.ticker(&format!("{t} {next}")) {
                    out.insert(tk.to_string());
                }
            }
        }
        out
    }

    pub fn is_org(&self, surface: &str) -> bool {
        self.orgs.iter().any(|o| o == surface)
    }

    pub fn is_event_noun(&self, word: &str) -> bool {
        self.event_nouns.iter().any(|n| n.eq_ignore_ascii_case(word))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_aliases() {
        let g = Gazetteer::builtin();
        let found = g.tickers_in("BTC and bitcoin both; also Binance Coin");
        assert_eq!(found, ["BNB", "BTC"].iter().map(|s| s.to_string()).collect());
        assert_eq!(g.version, 1);
    }
}
