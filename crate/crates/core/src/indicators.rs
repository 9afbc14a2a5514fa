//! Technical indicators consumed by the technical-analysis agent.
//!
//! Every function is pure and works on closes (or lows/highs/volumes) of a
//! [`CandleSeries`]. Series outputs are aligned to the tail of the input: an
//! output with `offset = k` has its first value at input index `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::CandleSeries;

/// Values aligned to input indices `offset..`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aligned {
    pub offset: usize,
    pub values: Vec<f64>,
}

impl Aligned {
    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Macd {
    pub offset: usize,
    pub macd_line: Vec<f64>,
    pub signal_line: Vec<f64>,
    pub histogram: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bollinger {
    pub offset: usize,
    pub mid: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorParams {
    pub rsi_period: usize,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub bollinger_period: usize,
    pub bollinger_k: f64,
    pub level_lookback: usize,
    pub trend_lookback: usize,
    pub volume_period: usize,
}

impl Default for IndicatorParams {
    fn default() -> Self {
        IndicatorParams {
            rsi_period: 14,
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            bollinger_period: 20,
            bollinger_k: 2.0,
            level_lookback: 20,
            trend_lookback: 14,
            volume_period: 7,
        }
    }
}

impl IndicatorParams {
    /// Candles needed for every indicator in the bundle.
    pub fn min_history(&self) -> usize {
        [
            self.rsi_period + 1,
            self.macd_slow + self.macd_signal + 1,
            self.bollinger_period,
            self.level_lookback,
            self.trend_lookback.max(2),
            2 * self.volume_period,
        ]
        .into_iter()
        .max()
        .unwrap_or(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorBundle {
    pub rsi: Aligned,
    pub macd: Macd,
    pub bollinger: Bollinger,
    pub support: f64,
    pub resistance: f64,
    pub trend_strength: f64,
    /// Relative change of mean volume between the two latest periods.
    pub volume_trend: f64,
}

pub fn compute_bundle(series: &CandleSeries, params: &IndicatorParams) -> Result<IndicatorBundle> {
    let (support, resistance) = support_resistance(series, params.level_lookback)?;
    Ok(IndicatorBundle {
        rsi: rsi(series, params.rsi_period)?,
        macd: macd(series, params.macd_fast, params.macd_slow, params.macd_signal)?,
        bollinger: bollinger(series, params.bollinger_period, params.bollinger_k)?,
        support,
        resistance,
        trend_strength: trend_strength(series, params.trend_lookback)?,
        volume_trend: volume_trend(series, params.volume_period)?,
    })
}

fn need(needed: usize, available: usize) -> Result<()> {
    if available < needed {
        Err(Error::InsufficientHistory { needed, available })
    } else {
        Ok(())
    }
}

fn positive(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        Err(Error::InvalidArgument(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}

/// Wilder RSI. The first value sits at index `period`.
///
/// Zero average loss gives 100, zero average gain gives 0, and a window with
/// neither gives 50.
pub fn rsi(series: &CandleSeries, period: usize) -> Result<Aligned> {
    positive("period", period)?;
    let closes = series.closes();
    need(period + 1, closes.len())?;
    let p = period as f64;
    let mut gain = 0.0;
    let mut loss = 0.0;
    for i in 1..=period {
        let d = closes[i] - closes[i - 1];
        gain += d.max(0.0);
        loss += (-d).max(0.0);
    }
    gain /= p;
    loss /= p;
    let mut values = vec![rsi_value(gain, loss)];
    for i in period + 1..closes.len() {
        let d = closes[i] - closes[i - 1];
        gain = (gain * (p - 1.0) + d.max(0.0)) / p;
        loss = (loss * (p - 1.0) + (-d).max(0.0)) / p;
        values.push(rsi_value(gain, loss));
    }
    Ok(Aligned { offset: period, values })
}

fn rsi_value(gain: f64, loss: f64) -> f64 {
    match (gain > 0.0, loss > 0.0) {
        (_, false) if gain > 0.0 => 100.0,
        (false, false) => 50.0,
        (false, true) => 0.0,
        _ => (100.0 - 100.0 / (1.0 + gain / loss)).clamp(0.0, 100.0),
    }
}

/// Exponential moving average seeded with the simple mean of the first
/// `period` values; the first output sits at index `period - 1`.
pub fn ema(values: &[f64], period: usize) -> Vec<f64> {
    if period == 0 || values.len() < period {
        return Vec::new();
    }
    let k = 2.0 / (period as f64 + 1.0);
    let mut out = Vec::with_capacity(values.len() - period + 1);
    let mut prev = values[..period].iter().sum::<f64>() / period as f64;
    out.push(prev);
    for x in &values[period..] {
        prev = k * x + (1.0 - k) * prev;
        out.push(prev);
    }
    out
}

/// MACD with all three series aligned at index `slow + signal - 2`.
pub fn macd(series: &CandleSeries, fast: usize, slow: usize, signal: usize) -> Result<Macd> {
    positive("fast", fast)?;
    positive("signal", signal)?;
    if slow <= fast {
        return Err(Error::InvalidArgument("slow period must exceed fast period".into()));
    }
    let closes = series.closes();
    need(slow + signal + 1, closes.len())?;
    let fast_ema = ema(&closes, fast);
    let slow_ema = ema(&closes, slow);
    // fast_ema starts at fast-1, slow_ema at slow-1.
    let shift = slow - fast;
    let line: Vec<f64> = slow_ema.iter().enumerate().map(|(i, s)| fast_ema[i + shift] - s).collect();
    let signal_line = ema(&line, signal);
    let macd_line = line[signal - 1..].to_vec();
    let histogram = macd_line.iter().zip(&signal_line).map(|(m, s)| m - s).collect();
    Ok(Macd { offset: slow + signal - 2, macd_line, signal_line, histogram })
}

/// Rolling mean and population standard deviation bands.
pub fn bollinger(series: &CandleSeries, period: usize, k: f64) -> Result<Bollinger> {
    positive("period", period)?;
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::InvalidArgument("k must be finite and non-negative".into()));
    }
    let closes = series.closes();
    need(period, closes.len())?;
    let n = period as f64;
    let mut mid = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for w in closes.windows(period) {
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let band = k * var.sqrt();
        mid.push(mean);
        upper.push(mean + band);
        lower.push(mean - band);
    }
    Ok(Bollinger { offset: period - 1, mid, upper, lower })
}

/// Minimum low and maximum high over the last `lookback` candles.
pub fn support_resistance(series: &CandleSeries, lookback: usize) -> Result<(f64, f64)> {
    positive("lookback", lookback)?;
    need(lookback, series.len())?;
    let tail = &series.candles[series.len() - lookback..];
    let support = tail.iter().map(|c| c.l).fold(f64::INFINITY, f64::min);
    let resistance = tail.iter().map(|c| c.h).fold(f64::NEG_INFINITY, f64::max);
    Ok((support, resistance))
}

/// Least-squares slope of close against index over the last `lookback`
/// candles, divided by the mean close of that window.
pub fn trend_strength(series: &CandleSeries, lookback: usize) -> Result<f64> {
    if lookback < 2 {
        return Err(Error::InvalidArgument("lookback must be at least 2".into()));
    }
    need(lookback, series.len())?;
    let closes: Vec<f64> = series.candles[series.len() - lookback..].iter().map(|c| c.c).collect();
    Ok(normalized_slope(&closes))
}

pub(crate) fn normalized_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    if sxx == 0.0 || y_mean == 0.0 {
        return 0.0;
    }
    (sxy / sxx) / y_mean
}

/// `mean(v over last period) / mean(v over the period before) - 1`, or 0 when
/// the earlier period traded nothing.
pub fn volume_trend(series: &CandleSeries, period: usize) -> Result<f64> {
    positive("period", period)?;
    need(2 * period, series.len())?;
    let n = series.len();
    let mean = |s: &[crate::market_data::Candle]| s.iter().map(|c| c.v).sum::<f64>() / s.len() as f64;
    let recent = mean(&series.candles[n - period..]);
    let before = mean(&series.candles[n - 2 * period..n - period]);
    Ok(if before > 0.0 { recent / before - 1.0 } else { 0.0 })
}
