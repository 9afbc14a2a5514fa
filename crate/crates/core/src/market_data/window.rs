use super::candle::{CandleSeries, Timestamp};
use crate::error::{Error, Result};

/// Sub-series covering `(ending_at - span, ending_at]`.
///
/// `span_secs` must be a positive multiple of the resolution step and
/// `ending_at` must sit on the series grid.
pub fn window(series: &CandleSeries, ending_at: Timestamp, span_secs: i64) -> Result<CandleSeries> {
    let step = series.resolution.step();
    if span_secs <= 0 || span_secs % step != 0 {
        return Err(Error::InvalidArgument(format!(
            "span {span_secs}s is not a positive multiple of the {}s step",
            step
        )));
    }
    let needed = (span_secs / step) as usize;
    let Some(first) = series.first_time() else {
        return Err(Error::InsufficientHistory { needed, available: 0 });
    };
    if (ending_at - first).rem_euclid(step) != 0 {
        return Err(Error::InvalidArgument(format!("ending_at {ending_at} is off the {}s grid", step)));
    }
    let slice = series.slice_between(ending_at - span_secs, ending_at);
    let complete = slice.len() == needed && slice.last().map(|c| c.t) == Some(ending_at);
    if !complete {
        return Err(Error::InsufficientHistory { needed, available: slice.len() });
    }
    Ok(series.with_candles(slice.to_vec()))
}

/// Window ending at the last candle.
pub fn tail(series: &CandleSeries, span_secs: i64) -> Result<CandleSeries> {
    let end = series.last_time().ok_or(Error::InsufficientHistory {
        needed: (span_secs / series.resolution.step()).max(0) as usize,
        available: 0,
    })?;
    window(series, end, span_secs)
}
