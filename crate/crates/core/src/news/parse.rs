use chrono::DateTime;
use serde::Deserialize;
use serde_json::Value;

use super::gazetteer::Gazetteer;
use super::item::NewsItem;
use crate::error::{Error, Result};
use crate::market_data::{parse_timestamp, Timestamp};

/// Epoch seconds/millis, RFC 3339 or RFC 2822 (RSS `pubDate`).
pub fn parse_news_time(raw: &str) -> Option<Timestamp> {
    parse_timestamp(raw).or_else(|| DateTime::parse_from_rfc2822(raw.trim()).ok().map(|d| d.timestamp()))
}

fn text_field<'a>(record: &'a Value, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| record.get(*k).and_then(Value::as_str)).map(str::trim).filter(|s| !s.is_empty())
}

/// Normalizes one raw record (`{headline, body, time, source, url}`, with
/// RSS-style aliases accepted) into a [`NewsItem`].
pub fn parse_news(record: &Value, gazetteer: &Gazetteer) -> Result<NewsItem> {
    let headline = text_field(record, &["headline", "title"]).ok_or_else(|| Error::MissingField("headline".into()))?;
    let time = match ["time", "timestamp", "published", "pubDate"].iter().find_map(|k| record.get(*k)) {
        Some(Value::Number(n)) => n.as_i64().and_then(|v| parse_timestamp(&v.to_string())),
        Some(Value::String(s)) => parse_news_time(s),
        _ => None,
    }
    .ok_or_else(|| Error::MissingField("time".into()))?;
    let body = text_field(record, &["body", "description", "summary"]).unwrap_or("").to_string();
    let source = text_field(record, &["source"]).unwrap_or("unknown").to_string();
    let url = text_field(record, &["url", "link"]).map(str::to_string);
    let tokens_mentioned = gazetteer.tickers_in(&format!("{headline} {body}"));
    Ok(NewsItem {
        id: NewsItem::stable_id(&source, time, headline),
        headline: headline.to_string(),
        body,
        time,
        source,
        url,
        tokens_mentioned,
        sentiment: None,
        sentiment_score: None,
        entities: None,
    })
}

/// One record per non-empty line.
pub fn parse_news_jsonl(text: &str, gazetteer: &Gazetteer) -> Result<Vec<NewsItem>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Value = serde_json::from_str(l).map_err(|e| Error::MalformedRow { line: i + 1, reason: e.to_string() })?;
            parse_news(&v, gazetteer)
        })
        .collect()
}

#[derive(Deserialize)]
struct Rss {
    channel: Channel,
}

#[derive(Deserialize)]
struct Channel {
    title: Option<String>,
    #[serde(default)]
    item: Vec<RssItem>,
}

#[derive(Deserialize)]
struct RssItem {
    title: Option<String>,
    description: Option<String>,
    #[serde(rename = "pubDate")]
    pub_date: Option<String>,
    link: Option<String>,
    source: Option<String>,
}

/// Items of an RSS 2.0 document; the channel title is the default source.
pub fn parse_rss(xml: &str, gazetteer: &Gazetteer) -> Result<Vec<NewsItem>> {
    let rss: Rss = quick_xml::de::from_str(xml).map_err(|e| Error::InvalidArgument(format!("bad RSS: {e}")))?;
    let channel_source = rss.channel.title.unwrap_or_else(|| "rss".into());
    rss.channel
        .item
        .into_iter()
        .map(|it| {
            let mut obj = serde_json::Map::new();
            let mut put = |k: &str, v: Option<String>| {
                if let Some(v) = v {
                    obj.insert(k.to_string(), Value::String(v));
                }
            };
            put("headline", it.title);
            put("body", it.description);
            put("time", it.pub_date);
            put("url", it.link);
            put("source", Some(it.source.unwrap_or_else(|| channel_source.clone())));
            parse_news(&Value::Object(obj), gazetteer)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn gazetteer_normalization() {
        let item = parse_news(
            &json!({"headline": "BTC climbs", "body": "bitcoin buyers return", "time": 1_700_000_000, "source": "wire"}),
            Gazetteer::builtin(),
        )
        .unwrap();
        assert_eq!(item.tokens_mentioned.iter().collect::<Vec<_>>(), vec!["BTC"]);
        assert_eq!(item.id, NewsItem::stable_id("wire", 1_700_000_000, "BTC climbs"));
    }

    #[test]
    fn missing_fields() {
        let g = Gazetteer::builtin();
        assert!(matches!(parse_news(&json!({"headline": "x"}), g), Err(Error::MissingField(f)) if f == "time"));
        assert!(matches!(parse_news(&json!({"time": 5}), g), Err(Error::MissingField(f)) if f == "headline"));
    }

    #[test]
    fn rfc2822_dates() {
        assert_eq!(parse_news_time("Tue, 14 Nov 2023 22:13:20 +0000"), Some(1_700_000_000));
    }

    #[test]
    fn rss_document() {
        let xml = r#"<?xml version="1.0"?><rss version="2.0"><channel><title>Feed</title>
            <item><title>ETH upgrade ships</title><description>Ethereum devs ship.</description>
            <pubDate>Tue, 14 Nov 2023 22:13:20 +0000</pubDate><link>https://x/1</link></item>
            <item><title>No date</title></item></channel></rss>"#;
        let err = parse_rss(xml, Gazetteer::builtin()).unwrap_err();
        assert!(matches!(err, Error::MissingField(_)));
        let ok = xml.replace("<item><title>No date</title></item>", "");
        let items = parse_rss(&ok, Gazetteer::builtin()).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].source, "Feed");
        assert_eq!(items[0].time, 1_700_000_000);
        assert!(items[0].tokens_mentioned.contains("ETH"));
    }
}
