use std::io::Read;

use chrono::DateTime;
use serde_json::Value;

use super::candle::{Candle, CandleSeries, Resolution, Timestamp};
use crate::error::{Error, Result};

/// Input encoding accepted by [`ingest_candles`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandleFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for CandleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(CandleFormat::Csv),
            "jsonl" | "ndjson" => Ok(CandleFormat::Jsonl),
            other => Err(Error::InvalidArgument(format!("unknown candle format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Forward-fill missing grid points (close carried, zero volume) instead
    /// of rejecting the input.
    pub allow_gaps: bool,
}

const COLUMNS: [&str; 6] = ["t", "o", "h", "l", "c", "v"];

/// Decodes, validates and sorts a candle stream.
pub fn ingest_candles(
    source: impl Read,
    format: CandleFormat,
    symbol: &str,
    resolution: Resolution,
    options: IngestOptions,
) -> Result<CandleSeries> {
    let mut candles = match format {
        CandleFormat::Csv => parse_csv(source)?,
        CandleFormat::Jsonl => parse_jsonl(source)?,
    };
    candles.sort_by_key(|c| c.t);
    for pair in candles.windows(2) {
        if pair[0].t == pair[1].t {
            return Err(Error::NonMonotonicTimestamps(pair[1].t));
        }
    }
    let candles = if options.allow_gaps { fill_gaps(candles, resolution)? } else { candles };
    CandleSeries::new(symbol, resolution, candles)
}

fn fill_gaps(candles: Vec<Candle>, resolution: Resolution) -> Result<Vec<Candle>> {
    let step = resolution.step();
    let mut out: Vec<Candle> = Vec::with_capacity(candles.len());
    for c in candles {
        if let Some(prev) = out.last().copied() {
            let delta = c.t - prev.t;
            if delta % step != 0 {
                return Err(Error::GapInSeries(c.t));
            }
            let mut t = prev.t + step;
            while t < c.t {
                out.push(Candle { t, o: prev.c, h: prev.c, l: prev.c, c: prev.c, v: 0.0, filled: true });
                t += step;
            }
        }
        out.push(c);
    }
    Ok(out)
}

/// Parses epoch seconds, epoch milliseconds or an RFC 3339 string into UTC
/// epoch seconds.
pub fn parse_timestamp(raw: &str) -> Option<Timestamp> {
    let raw = raw.trim();
    if let Ok(n) = raw.parse::<i64>() {
        return Some(normalize_epoch(n));
    }
    if let Ok(x) = raw.parse::<f64>() {
        if x.is_finite() {
            return Some(normalize_epoch(x.floor() as i64));
        }
    }
    DateTime::parse_from_rfc3339(raw).ok().map(|dt| dt.timestamp())
}

fn normalize_epoch(n: i64) -> Timestamp {
    // Millisecond epochs are > 1e11 for any date after 1973.
    if n.abs() >= 100_000_000_000 {
        n.div_euclid(1000)
    } else {
        n
    }
}

fn parse_csv(source: impl Read) -> Result<Vec<Candle>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut order: [usize; 6] = [0, 1, 2, 3, 4, 5];
    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = record.as_ref().ok().and_then(|r| r.position()).map(|p| p.line() as usize).unwrap_or(idx + 1);
        let record = record.map_err(|e| Error::MalformedRow { line, reason: e.to_string() })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if idx == 0 && parse_timestamp(record.get(0).unwrap_or("")).is_none() {
            order = header_order(&record).ok_or_else(|| Error::MalformedRow {
                line,
                reason: "header must name columns t,o,h,l,c,v".into(),
            })?;
            continue;
        }
        let field = |i: usize| -> Result<&str> {
            record.get(order[i]).ok_or_else(|| Error::MalformedRow {
                line,
                reason: format!("missing column '{}'", COLUMNS[i]),
            })
        };
        let t = parse_timestamp(field(0)?)
            .ok_or_else(|| Error::MalformedRow { line, reason: "bad timestamp".into() })?;
        let mut vals = [0.0; 5];
        for (k, slot) in vals.iter_mut().enumerate() {
            let raw = field(k + 1)?;
            *slot = raw.parse::<f64>().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("bad number '{raw}' in column '{}'", COLUMNS[k + 1]),
            })?;
        }
        let candle = Candle::new(t, vals[0], vals[1], vals[2], vals[3], vals[4]);
        row_check(&candle, line)?;
        out.push(candle);
    }
    Ok(out)
}

fn header_order(record: &csv::StringRecord) -> Option<[usize; 6]> {
    let mut order = [usize::MAX; 6];
    for (pos, name) in record.iter().enumerate() {
        let name = name.to_ascii_lowercase();
        let key = match name.as_str() {
            "t" | "time" | "timestamp" => 0,
            "o" | "open" => 1,
            "h" | "high" => 2,
            "l" | "low" => 3,
            "c" | "close" => 4,
            "v" | "volume" => 5,
            _ => continue,
        };
        order[key] = pos;
    }
    order.iter().all(|&p| p != usize::MAX).then_some(order)
}

fn parse_jsonl(mut source: impl Read) -> Result<Vec<Candle>> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(raw)
            .map_err(|e| Error::MalformedRow { line, reason: e.to_string() })?;
        let get = |key: &str| value.get(key).ok_or_else(|| Error::MalformedRow {
            line,
            reason: format!("missing key '{key}'"),
        });
        let t = match get("t")? {
            Value::Number(n) => n.as_i64().map(normalize_epoch).or_else(|| n.as_f64().map(|x| normalize_epoch(x.floor() as i64))),
            Value::String(s) => parse_timestamp(s),
            _ => None,
        }
        .ok_or_else(|| Error::MalformedRow { line, reason: "bad timestamp".into() })?;
        let mut vals = [0.0; 5];
        for (k, slot) in vals.iter_mut().enumerate() {
            let key = COLUMNS[k + 1];
            *slot = match get(key)? {
                Value::Number(n) => n.as_f64(),
                Value::String(s) => s.parse().ok(),
                _ => None,
            }
            .ok_or_else(|| Error::MalformedRow { line, reason: format!("bad number for '{key}'") })?;
        }
        let candle = Candle::new(t, vals[0], vals[1], vals[2], vals[3], vals[4]);
        row_check(&candle, line)?;
        out.push(candle);
    }
    Ok(out)
}

fn row_check(candle: &Candle, line: usize) -> Result<()> {
    candle.validate().map_err(|e| match e {
        Error::InvalidArgument(reason) => Error::MalformedRow { line, reason },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(text: &str) -> Result<CandleSeries> {
        ingest_candles(text.as_bytes(), CandleFormat::Csv, "BTC", Resolution::OneDay, IngestOptions::default())
    }

    #[test]
    fn single_row() {
        let s = csv("1700000000,2,5,1,4,100").unwrap();
        assert_eq!(s.candles, vec![Candle::new(1_700_000_000, 2.0, 5.0, 1.0, 4.0, 100.0)]);
    }

    #[test]
    fn header_is_detected_and_reordered() {
        let s = csv("close,time,open,high,low,volume\n4,1700000000,2,5,1,100\n").unwrap();
        assert_eq!(s.candles[0].c, 4.0);
        assert_eq!(s.candles[0].o, 2.0);
    }

    #[test]
    fn high_below_open_is_rejected() {
        let err = csv("1700000000,4,3,1,2,1").unwrap_err();
        assert!(matches!(err, Error::OhlcInvariantViolated(1_700_000_000)));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = csv("t,o,h,l,c,v\n0,1,1,1,1,1\n86400,1,x,1,1,1\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn duplicates_rejected_and_unsorted_sorted() {
        assert!(matches!(csv("0,1,1,1,1,1\n0,1,1,1,1,1").unwrap_err(), Error::NonMonotonicTimestamps(0)));
        let s = csv("86400,1,1,1,1,1\n0,1,1,1,1,1").unwrap();
        assert_eq!(s.first_time(), Some(0));
    }

    #[test]
    fn millis_and_rfc3339_normalize() {
        assert_eq!(parse_timestamp("1700000000000"), Some(1_700_000_000));
        assert_eq!(parse_timestamp("2023-11-14T22:13:20Z"), Some(1_700_000_000));
        assert_eq!(parse_timestamp("2023-11-15T00:13:20+02:00"), Some(1_700_000_000));
    }

    #[test]
    fn gaps_rejected_unless_allowed() {
        let text = "0,1,2,1,2,5\n172800,2,3,2,3,5";
        assert!(matches!(csv(text).unwrap_err(), Error::GapInSeries(172_800)));
        let s = ingest_candles(
            text.as_bytes(),
            CandleFormat::Csv,
            "X",
            Resolution::OneDay,
            IngestOptions { allow_gaps: true },
        )
        .unwrap();
        assert_eq!(s.len(), 3);
        let filled = s.candles[1];
        assert!(filled.filled);
        assert_eq!((filled.o, filled.c, filled.v), (2.0, 2.0, 0.0));
    }

    #[test]
    fn jsonl_rows() {
        let text = "{\"t\":0,\"o\":2,\"h\":5,\"l\":1,\"c\":4,\"v\":100}\n\n{\"t\":\"1970-01-02T00:00:00Z\",\"o\":4,\"h\":4,\"l\":4,\"c\":4,\"v\":0}\n";
        let s = ingest_candles(text.as_bytes(), CandleFormat::Jsonl, "X", Resolution::OneDay, IngestOptions::default()).unwrap();
        assert_eq!(s.len(), 2);
        let err = ingest_candles("{\"t\":0}".as_bytes(), CandleFormat::Jsonl, "X", Resolution::OneDay, IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 1, .. }));
    }
}
