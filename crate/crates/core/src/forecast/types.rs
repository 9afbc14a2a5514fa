use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{window, Candle, CandleSeries, Resolution, Timestamp, Track};
use crate::news::NewsItem;

pub const DAY: i64 = 86_400;
pub const HOUR: i64 = 3_600;

/// News older than this before `t0` is historical, the rest realtime.
pub const REALTIME_NEWS_SPAN: i64 = DAY;

/// Everything the forecast tracks get to see at issue time `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastInput {
    pub x_14d: CandleSeries,
    pub x_48h: CandleSeries,
    pub news_hist: Vec<NewsItem>,
    pub news_realtime: Vec<NewsItem>,
    pub gamma: f64,
    pub t0: Timestamp,
}

impl ForecastInput {
    /// Historical then realtime news, each ordered by time.
    pub fn all_news(&self) -> impl Iterator<Item = &NewsItem> {
        self.news_hist.iter().chain(&self.news_realtime)
    }
}

/// Daily series for the 14-day view and hourly series for the 48-hour view.
/// Other resolutions may be present for the forecast target itself.
#[derive(Debug, Clone, Default)]
pub struct SeriesSet {
    pub series: BTreeMap<Resolution, CandleSeries>,
}

impl SeriesSet {
    pub fn new(list: impl IntoIterator<Item = CandleSeries>) -> Self {
        SeriesSet { series: list.into_iter().map(|s| (s.resolution, s)).collect() }
    }

    pub fn get(&self, resolution: Resolution) -> Result<&CandleSeries> {
        self.series
            .get(&resolution)
            .ok_or(Error::InsufficientHistory { needed: window_len(resolution), available: 0 })
    }
}

fn window_len(resolution: Resolution) -> usize {
    match resolution {
        Resolution::OneDay => 14,
        Resolution::OneHour => 48,
        Resolution::FiveMin => 1,
    }
}

fn cut(series: &CandleSeries, t0: Timestamp, span: i64) -> Result<CandleSeries> {
    let needed = (span / series.resolution.step()) as usize;
    let end = series.latest_at_or_before(t0).ok_or(Error::InsufficientHistory { needed, available: 0 })?;
    window(series, end, span)
}

/// Cuts the two candle windows ending at or before `t0` and splits `news`
/// into historical (`time < t0 - 24h`) and realtime items. News after `t0`
/// is dropped.
pub fn build_input(set: &SeriesSet, news: &[NewsItem], gamma: f64, t0: Timestamp) -> Result<ForecastInput> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1]")));
    }
    let x_14d = cut(set.get(Resolution::OneDay)?, t0, 14 * DAY)?;
    let x_48h = cut(set.get(Resolution::OneHour)?, t0, 48 * HOUR)?;
    let mut visible: Vec<NewsItem> = news.iter().filter(|n| n.time <= t0).cloned().collect();
    visible.sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.id.cmp(&b.id)));
    let (news_hist, news_realtime) = visible.into_iter().partition(|n| n.time < t0 - REALTIME_NEWS_SPAN);
    Ok(ForecastInput { x_14d, x_48h, news_hist, news_realtime, gamma, t0 })
}

/// A predicted path of `horizon` candles for one track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSeries {
    pub steps: Vec<Candle>,
    pub horizon: usize,
    pub track: Track,
}

impl ForecastSeries {
    pub fn new(steps: Vec<Candle>, track: Track) -> Self {
        ForecastSeries { horizon: steps.len(), steps, track }
    }

    pub fn closes(&self) -> Vec<f64> {
        self.steps.iter().map(|c| c.c).collect()
    }

    /// Checks the length and that step `i` sits at `t0 + step * (i + 1)`.
    pub fn validate(&self, t0: Timestamp, resolution: Resolution) -> Result<()> {
        if self.horizon == 0 || self.steps.len() != self.horizon {
            return Err(Error::HorizonMismatch);
        }
        for (i, c) in self.steps.iter().enumerate() {
            if c.t != t0 + resolution.step() * (i as i64 + 1) {
                return Err(Error::HorizonMismatch);
            }
        }
        Ok(())
    }
}

/// Forecast steps per resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HorizonTable {
    #[serde(rename = "1d")]
    pub one_day: usize,
    #[serde(rename = "1h")]
    pub one_hour: usize,
    #[serde(rename = "5m")]
    pub five_min: usize,
}

impl Default for HorizonTable {
    fn default() -> Self {
        HorizonTable { one_day: 2, one_hour: 12, five_min: 24 }
    }
}

impl HorizonTable {
    pub fn steps(&self, resolution: Resolution) -> usize {
        match resolution {
            Resolution::OneDay => self.one_day,
            Resolution::OneHour => self.one_hour,
            Resolution::FiveMin => self.five_min,
        }
    }
}
