//! News structuring, enrichment and the doc–entity knowledge graph.

mod gazetteer;
mod graph;
mod item;
mod ner;
mod parse;
mod sentiment;

pub use gazetteer::Gazetteer;
pub use graph::{
    build_graph, EdgeRelation, EntityInfo, GraphCell, GraphSnapshot, KnowledgeGraph, NodeId, SnapshotEdge, SnapshotNode, Subgraph,
    GRAPH_SCHEMA_VERSION,
};
pub use item::{canonicalize, Entity, EntityKind, NewsItem, Sentiment};
pub use ner::{extract_entities, EntityProvider, GazetteerNer};
pub use parse::{parse_news, parse_news_jsonl, parse_news_time, parse_rss};
pub use sentiment::{classify_sentiment, label, Lexicon, LexiconSentiment, SentimentProvider};

use crate::error::Result;
use crate::market_data::Timestamp;

/// Items with `t0 - delta <= time <= t0` (both ends inclusive), in input order.
pub fn filter_recent(items: &[NewsItem], t0: Timestamp, delta_secs: i64) -> Vec<NewsItem> {
    items.iter().filter(|n| n.time >= t0 - delta_secs && n.time <= t0).cloned().collect()
}

/// Fills sentiment and entities in place.
pub fn annotate(
    items: &mut [NewsItem],
    tau: f64,
    sentiment: &dyn SentimentProvider,
    ner: &dyn EntityProvider,
) -> Result<()> {
    for item in items.iter_mut() {
        let (label, score) = classify_sentiment(item, tau, sentiment)?;
        item.set_sentiment(label, score);
        item.entities = Some(extract_entities(item, ner)?);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(t: Timestamp) -> NewsItem {
        NewsItem {
            id: t.to_string(),
            headline: "h".into(),
            body: String::new(),
            time: t,
            source: "s".into(),
            url: None,
            tokens_mentioned: Default::default(),
            sentiment: None,
            sentiment_score: None,
            entities: None,
        }
    }

    #[test]
    fn boundaries() {
        let t0 = 1_000_000;
        let kept = filter_recent(&[at(t0 - 86_400), at(t0 + 1), at(t0), at(t0 - 86_401)], t0, 86_400);
        let times: Vec<_> = kept.iter().map(|n| n.time).collect();
        assert_eq!(times, vec![t0 - 86_400, t0]);
    }

    proptest! {
        #[test]
        fn idempotent(times in prop::collection::vec(-500i64..500, 0..40), delta in 0i64..300) {
            let items: Vec<_> = times.iter().map(|&t| at(t)).collect();
            let once = filter_recent(&items, 100, delta);
            prop_assert_eq!(filter_recent(&once, 100, delta), once.clone());
            let oracle: Vec<_> = items.iter().filter(|n| (100 - delta..=100).contains(&n.time)).cloned().collect();
            prop_assert_eq!(once, oracle);
        }
    }
}
