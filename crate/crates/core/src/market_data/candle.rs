use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Epoch seconds, UTC.
pub type Timestamp = i64;

/// Bar interval of a candle series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Resolution {
    #[serde(rename = "1d")]
    OneDay,
    #[serde(rename = "1h")]
    OneHour,
    #[serde(rename = "5m", alias = "5min")]
    FiveMin,
}

impl Resolution {
    pub const ALL: [Resolution; 3] = [Resolution::OneDay, Resolution::OneHour, Resolution::FiveMin];

    /// Step between consecutive candles, in seconds.
    pub const fn step(self) -> i64 {
        match self {
            Resolution::OneDay => 86_400,
            Resolution::OneHour => 3_600,
            Resolution::FiveMin => 300,
        }
    }

    /// Short label used in table and file names (`1d`, `1h`, `5m`).
    pub const fn label(self) -> &'static str {
        match self {
            Resolution::OneDay => "1d",
            Resolution::OneHour => "1h",
            Resolution::FiveMin => "5m",
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1d" | "d" | "day" | "daily" => Ok(Resolution::OneDay),
            "1h" | "h" | "hour" | "hourly" => Ok(Resolution::OneHour),
            "5m" | "5min" => Ok(Resolution::FiveMin),
            other => Err(Error::InvalidArgument(format!("unknown resolution '{other}'"))),
        }
    }
}

/// One OHLCV bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub t: Timestamp,
    pub o: f64,
    pub h: f64,
    pub l: f64,
    pub c: f64,
    pub v: f64,
    /// Set on candles synthesized by gap filling.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub filled: bool,
}

impl Candle {
    pub fn new(t: Timestamp, o: f64, h: f64, l: f64, c: f64, v: f64) -> Self {
        Candle { t, o, h, l, c, v, filled: false }
    }

    /// `l <= min(o, c)`, `h >= max(o, c)` and `l <= h`.
    pub fn is_consistent(&self) -> bool {
        self.l <= self.o.min(self.c) && self.h >= self.o.max(self.c) && self.l <= self.h
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.o, self.h, self.l, self.c, self.v];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value in candle at t={}", self.t)));
        }
        if self.o <= 0.0 || self.h <= 0.0 || self.l <= 0.0 || self.c <= 0.0 {
            return Err(Error::InvalidArgument(format!("non-positive price at t={}", self.t)));
        }
        if self.v < 0.0 {
            return Err(Error::InvalidArgument(format!("negative volume at t={}", self.t)));
        }
        if !self.is_consistent() {
            return Err(Error::OhlcInvariantViolated(self.t));
        }
        Ok(())
    }
}

/// Candles of one symbol at one resolution on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandleSeries {
    pub symbol: String,
    pub resolution: Resolution,
    pub candles: Vec<Candle>,
}

impl CandleSeries {
    /// Builds a series after checking every candle and the grid.
    pub fn new(symbol: impl Into<String>, resolution: Resolution, candles: Vec<Candle>) -> Result<Self> {
        let series = CandleSeries { symbol: symbol.into(), resolution, candles };
        series.validate()?;
        Ok(series)
    }

    pub fn validate(&self) -> Result<()> {
        let step = self.resolution.step();
        for c in &self.candles {
            c.validate()?;
        }
        for pair in self.candles.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(Error::NonMonotonicTimestamps(pair[1].t));
            }
            if pair[1].t - pair[0].t != step {
                return Err(Error::GapInSeries(pair[1].t));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.candles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candles.is_empty()
    }

    pub fn first_time(&self) -> Option<Timestamp> {
        self.candles.first().map(|c| c.t)
    }

    pub fn last_time(&self) -> Option<Timestamp> {
        self.candles.last().map(|c| c.t)
    }

    pub fn last(&self) -> Option<&Candle> {
        self.candles.last()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.c).collect()
    }

    /// Latest candle time that is `<= t`.
    pub fn latest_at_or_before(&self, t: Timestamp) -> Option<Timestamp> {
        let idx = self.candles.partition_point(|c| c.t <= t);
        idx.checked_sub(1).map(|i| self.candles[i].t)
    }

    /// Candles with `from < t <= to`.
    pub fn slice_between(&self, from_exclusive: Timestamp, to_inclusive: Timestamp) -> &[Candle] {
        let lo = self.candles.partition_point(|c| c.t <= from_exclusive);
        let hi = self.candles.partition_point(|c| c.t <= to_inclusive);
        &self.candles[lo..hi.max(lo)]
    }

    /// Same symbol and resolution, different candles; skips validation since
    /// callers only pass contiguous sub-slices of a validated series.
    pub(crate) fn with_candles(&self, candles: Vec<Candle>) -> CandleSeries {
        CandleSeries { symbol: self.symbol.clone(), resolution: self.resolution, candles }
    }
}

/// Source track of a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Track {
    #[serde(rename = "ML")]
    Ml,
    #[serde(rename = "LLM")]
    Llm,
    Fused,
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Track::Ml => "ML",
            Track::Llm => "LLM",
            Track::Fused => "Fused",
        })
    }
}

/// A forecast as archived in the resolution tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub symbol: String,
    pub resolution: Resolution,
    pub issued_at: Timestamp,
    pub horizon_steps: usize,
    pub predicted: Vec<Candle>,
    pub source: Track,
}

impl PredictionRecord {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_steps == 0 {
            return Err(Error::InvalidArgument("horizon_steps must be positive".into()));
        }
        if self.predicted.len() != self.horizon_steps {
            return Err(Error::LengthMismatch { left: self.predicted.len(), right: self.horizon_steps });
        }
        let step = self.resolution.step();
        for (i, c) in self.predicted.iter().enumerate() {
            let expected = self.issued_at + step * (i as i64 + 1);
            if c.t != expected {
                return Err(Error::InvalidArgument(format!(
                    "predicted candle {i} at t={} is off the grid (expected {expected})",
                    c.t
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_steps() {
        assert_eq!(Resolution::OneDay.step(), 86_400);
        assert_eq!(Resolution::OneHour.step(), 3_600);
        assert_eq!(Resolution::FiveMin.step(), 300);
        assert_eq!("5min".parse::<Resolution>().unwrap(), Resolution::FiveMin);
        assert!("2h".parse::<Resolution>().is_err());
    }

    #[test]
    fn candle_invariants() {
        assert!(Candle::new(0, 2.0, 5.0, 1.0, 4.0, 100.0).validate().is_ok());
        assert!(matches!(
            Candle::new(7, 4.0, 3.0, 1.0, 2.0, 1.0).validate(),
            Err(Error::OhlcInvariantViolated(7))
        ));
    }

    #[test]
    fn series_rejects_gap() {
        let c = |t| Candle::new(t, 1.0, 1.0, 1.0, 1.0, 0.0);
        let err = CandleSeries::new("X", Resolution::OneHour, vec![c(0), c(7200)]).unwrap_err();
        assert!(matches!(err, Error::GapInSeries(7200)));
    }
}
