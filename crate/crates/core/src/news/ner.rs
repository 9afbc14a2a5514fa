use std::collections::BTreeSet;

use super::gazetteer::Gazetteer;
use super::item::{Entity, EntityKind, NewsItem};
use crate::error::Result;

pub trait EntityProvider: Send + Sync {
    fn extract(&self, item: &NewsItem) -> Result<Vec<Entity>>;
}

/// Extracts entities, keeping the first occurrence of each canonical id.
pub fn extract_entities(item: &NewsItem, provider: &dyn EntityProvider) -> Result<Vec<Entity>> {
    let mut seen = BTreeSet::new();
    Ok(provider.extract(item)?.into_iter().filter(|e| seen.insert(e.canonical_id.clone())).collect())
}

/// Rule-based extractor over the shipped gazetteer:
///
/// * crypto aliases (unigram or bigram) → `CRYPTO` with the ticker as surface;
/// * organization names → `ORG`;
/// * `<event verb> <Capitalized object>` → `EVT` "<object> <event noun>";
/// * runs of two or more capitalized words not otherwise claimed → `EVT` when
///   they contain an event noun, `PER` otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct GazetteerNer;

#[derive(Debug, Clone)]
struct Word {
    text: String,
    /// First word of a sentence (capitalization carries no signal).
    sentence_start: bool,
}

fn words(text: &str) -> Vec<Word> {
    let mut out = Vec::new();
    let mut start = true;
    for raw in text.split_whitespace() {
        let ends = raw.ends_with(['.', ';', '!', '?', ':']);
        let w: String = raw.trim_matches(|c: char| !c.is_alphanumeric()).to_string();
        if !w.is_empty() {
            out.push(Word { text: w, sentence_start: start });
            start = false;
        }
        if ends {
            start = true;
        }
    }
    out
}

fn capitalized(w: &str) -> bool {
    w.chars().next().is_some_and(char::is_uppercase)
}

impl GazetteerNer {
    pub fn extract_text(&self, text: &str, g: &Gazetteer) -> Vec<Entity> {
        let ws = words(text);
        let mut out = Vec::new();
        let mut claimed = vec![false; ws.len()];
        let mut i = 0;
        while i < ws.len() {
            if let Some(next) = ws.get(i + 1) {
                let pair = format!("{} {}", ws[i].text, next.text);
                if let Some(t) = g.ticker(&pair) {
                    out.push((i, Entity::new(t, EntityKind::Crypto)));
                    claimed[i] = true;
                    claimed[i + 1] = true;
                    i += 2;
                    continue;
                }
                if g.is_org(&pair) {
                    out.push((i, Entity::new(pair, EntityKind::Org)));
                    claimed[i] = true;
                    claimed[i + 1] = true;
                    i += 2;
                    continue;
                }
            }
            let w = &ws[i].text;
            if g.is_org(w) {
                out.push((i, Entity::new(w.clone(), EntityKind::Org)));
                claimed[i] = true;
            } else if let Some(t) = g.ticker(w) {
                // Lowercase short aliases ("op", "sol") only count when written as tickers or names.
                if w.len() > 3 || w.chars().all(|c| c.is_uppercase() || c.is_ascii_digit()) || capitalized(w) {
                    out.push((i, Entity::new(t, EntityKind::Crypto)));
                    claimed[i] = true;
                }
            }
            i += 1;
        }
        for i in 0..ws.len() {
            let Some(noun) = g.event_verbs.get(&ws[i].text.to_lowercase()) else { continue };
            if let Some(obj) = ws.get(i + 1) {
                if capitalized(&obj.text) {
                    let obj_surface = if claimed[i + 1] {
                        out.iter().find(|(p, _)| *p == i + 1).map(|(_, e)| e.surface.clone()).unwrap_or(obj.text.clone())
                    } else {
                        obj.text.clone()
                    };
                    out.push((i, Entity::new(format!("{obj_surface} {noun}"), EntityKind::Evt)));
                    claimed[i] = true;
                }
            }
        }
        let mut i = 0;
        while i < ws.len() {
            let is_cap = |k: usize| !claimed[k] && capitalized(&ws[k].text) && !g.event_verbs.contains_key(&ws[k].text.to_lowercase());
            if !is_cap(i) {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < ws.len() && is_cap(j) && !ws[j].sentence_start {
                j += 1;
            }
            if j - i >= 2 {
                let span: Vec<&str> = ws[i..j].iter().map(|w| w.text.as_str()).collect();
                let kind = if span.iter().any(|w| g.is_event_noun(w)) { EntityKind::Evt } else { EntityKind::Per };
                out.push((i, Entity::new(span.join(" "), kind)));
            }
            i = j;
        }
        out.sort_by_key(|(pos, _)| *pos);
        out.into_iter().map(|(_, e)| e).collect()
    }
}

impl EntityProvider for GazetteerNer {
    fn extract(&self, item: &NewsItem) -> Result<Vec<Entity>> {
        Ok(self.extract_text(&item.text(), Gazetteer::builtin()))
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

    fn pairs(es: &[Entity]) -> Vec<(String, EntityKind)> {
        es.iter().map(|e| (e.surface.clone(), e.kind)).collect()
    }

    #[test]
    fn sec_etf_bitcoin_sentence() {
        let es = extract_entities(&item("SEC approves ETF; Bitcoin rallies", ""), &GazetteerNer).unwrap();
        assert_eq!(
            pairs(&es),
            vec![
                ("SEC".to_string(), EntityKind::Org),
                ("ETF approval".to_string(), EntityKind::Evt),
                ("BTC".to_string(), EntityKind::Crypto),
            ]
        );
        assert_eq!(es[1].canonical_id, "etf approval");
        assert_eq!(es[2].canonical_id, "btc");
    }

    #[test]
    fn dedupes_by_canonical_id() {
        let es = extract_entities(&item("Bitcoin and BTC", "bitcoin again"), &GazetteerNer).unwrap();
        assert_eq!(pairs(&es), vec![("BTC".to_string(), EntityKind::Crypto)]);
    }

    #[test]
    fn persons_and_events() {
        let es = extract_entities(&item("Arthur Hayes expects the Bitcoin Halving rally", ""), &GazetteerNer).unwrap();
        assert!(es.iter().any(|e| e.surface == "Arthur Hayes" && e.kind == EntityKind::Per));
        // "Bitcoin" is claimed as CRYPTO, so "Halving" alone does not form a span.
        assert!(es.iter().any(|e| e.kind == EntityKind::Crypto && e.surface == "BTC"));
        let es = extract_entities(&item("Developers prepare the Dencun Upgrade", ""), &GazetteerNer).unwrap();
        assert!(es.iter().any(|e| e.surface == "Dencun Upgrade" && e.kind == EntityKind::Evt));
    }

    #[test]
    fn empty_body_headline_only() {
        let a = extract_entities(&item("Coinbase lists ARB", ""), &GazetteerNer).unwrap();
        assert_eq!(
            pairs(&a),
            vec![
                ("Coinbase".to_string(), EntityKind::Org),
                ("ARB listing".to_string(), EntityKind::Evt),
                ("ARB".to_string(), EntityKind::Crypto),
            ]
        );
    }
}
