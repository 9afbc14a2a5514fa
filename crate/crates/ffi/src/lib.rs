//! C ABI over the numeric core: fusion, forecast metrics, indicators, signal
//! scoring and the feedback policy.
//!
//! Every fallible function returns an [`MlionStatus`]; on failure a message
//! is available from [`mlion_last_error`] until the next call on the same
//! thread. Handles are created by `*_new` and released by `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mlion_core::forecast::{self, ForecastSeries, FusionConfig, FusionState};
use mlion_core::indicators;
use mlion_core::market_data::{Candle, CandleSeries, Resolution, Track};
use mlion_core::recommend::{self, PolicyWeights};
use mlion_core::report::{self, SignalWeights};
use mlion_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlionStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    AlphaOutOfRange = 3,
    HorizonMismatch = 4,
    NonPositiveActual = 5,
    LengthMismatch = 6,
    DimensionMismatch = 7,
    ComponentOutOfRange = 8,
    InsufficientHistory = 9,
    Panic = 98,
    Internal = 99,
}

/// One OHLCV bar; `t` in UTC epoch seconds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlionCandle {
    pub t: i64,
    pub o: f64,
    pub h: f64,
    pub l: f64,
    pub c: f64,
    pub v: f64,
}

/// Opaque adaptive-fusion state.
pub struct MlionFusion {
    state: FusionState,
}

/// Opaque per-user ranking weights.
pub struct MlionPolicy {
    weights: PolicyWeights,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MlionStatus {
    match e {
        Error::AlphaOutOfRange(_) => MlionStatus::AlphaOutOfRange,
        Error::HorizonMismatch => MlionStatus::HorizonMismatch,
        Error::NonPositiveActual(_) => MlionStatus::NonPositiveActual,
        Error::LengthMismatch { .. } => MlionStatus::LengthMismatch,
        Error::DimensionMismatch { .. } => MlionStatus::DimensionMismatch,
        Error::ComponentOutOfRange(_) => MlionStatus::ComponentOutOfRange,
        Error::InsufficientHistory { .. } => MlionStatus::InsufficientHistory,
        Error::InvalidArgument(_) | Error::ConfigInvalid(_) | Error::OhlcInvariantViolated(_) | Error::NonMonotonicTimestamps(_) => {
            MlionStatus::InvalidArgument
        }
        _ => MlionStatus::Internal,
    }
}

struct Fail(MlionStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(MlionStatus::NullPointer, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MlionStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlionStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside mlion".into());
            MlionStatus::Panic
        }
    }
}

/// Borrows `len` elements; a null pointer is only allowed when `len == 0`.
unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(name))
}

fn to_candle(c: &MlionCandle) -> Candle {
    Candle::new(c.t, c.o, c.h, c.l, c.c, c.v)
}

fn from_candle(c: &Candle) -> MlionCandle {
    MlionCandle { t: c.t, o: c.o, h: c.h, l: c.l, c: c.c, v: c.v }
}

/// Close-only daily series for the indicator entry points.
fn close_series(closes: &[f64]) -> Result<CandleSeries, Fail> {
    let candles = closes.iter().enumerate().map(|(i, &c)| Candle::new(i as i64 * 86_400, c, c, c, c, 0.0)).collect();
    Ok(CandleSeries::new("FFI", Resolution::OneDay, candles)?)
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next mlion call on the same thread.
#[no_mangle]
pub extern "C" fn mlion_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated library version.
#[no_mangle]
pub extern "C" fn mlion_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Fuses two aligned forecasts of `n` candles into `out` with weight `alpha`
/// on `llm`.
///
/// # Safety
/// `llm`, `ml` and `out` must each point to `n` candles.
#[no_mangle]
pub unsafe extern "C" fn mlion_fuse(llm: *const MlionCandle, ml: *const MlionCandle, n: usize, alpha: f64, out: *mut MlionCandle) -> MlionStatus {
    guard(|| {
        let l = slice(llm, n, "llm")?;
        let m = slice(ml, n, "ml")?;
        let o = slice_mut(out, n, "out")?;
        let fused = forecast::fuse(
            &ForecastSeries::new(l.iter().map(to_candle).collect(), Track::Llm),
            &ForecastSeries::new(m.iter().map(to_candle).collect(), Track::Ml),
            alpha,
        )?;
        for (slot, c) in o.iter_mut().zip(&fused.steps) {
            *slot = from_candle(c);
        }
        Ok(())
    })
}

/// `1 - |predicted - actual| / actual`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlion_accuracy(predicted: f64, actual: f64, out: *mut f64) -> MlionStatus {
    guard(|| {
        *out_ptr(out)? = forecast::accuracy(predicted, actual)?;
        Ok(())
    })
}

unsafe fn out_ptr<'a>(p: *mut f64) -> Result<&'a mut f64, Fail> {
    out(p, "out")
}

/// Fraction of steps whose direction matches, with `anchor` as the close
/// before the first step.
///
/// # Safety
/// `predicted` and `actual` must point to `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mlion_win_rate(predicted: *const f64, actual: *const f64, n: usize, anchor: f64, out: *mut f64) -> MlionStatus {
    guard(|| {
        *out_ptr(out)? = forecast::win_rate(slice(predicted, n, "predicted")?, slice(actual, n, "actual")?, anchor)?;
        Ok(())
    })
}

/// RSI over `n` closes. `out` receives `n` values; leading positions without
/// enough history are NaN.
///
/// # Safety
/// `closes` and `out` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn mlion_rsi(closes: *const f64, n: usize, period: usize, out: *mut f64) -> MlionStatus {
    guard(|| {
        let series = close_series(slice(closes, n, "closes")?)?;
        let r = indicators::rsi(&series, period)?;
        let o = slice_mut(out, n, "out")?;
        o.fill(f64::NAN);
        o[r.offset..r.offset + r.values.len()].copy_from_slice(&r.values);
        Ok(())
    })
}

/// MACD line, signal line and histogram over `n` closes, NaN-padded.
///
/// # Safety
/// `closes`, `line`, `signal_line` and `histogram` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn mlion_macd(
    closes: *const f64,
    n: usize,
    fast: usize,
    slow: usize,
    signal: usize,
    line: *mut f64,
    signal_line: *mut f64,
    histogram: *mut f64,
) -> MlionStatus {
    guard(|| {
        let series = close_series(slice(closes, n, "closes")?)?;
        let m = indicators::macd(&series, fast, slow, signal)?;
        for (dst, src, name) in [(line, &m.macd_line, "line"), (signal_line, &m.signal_line, "signal_line"), (histogram, &m.histogram, "histogram")] {
            let o = slice_mut(dst, n, name)?;
            o.fill(f64::NAN);
            o[m.offset..m.offset + src.len()].copy_from_slice(src);
        }
        Ok(())
    })
}

/// Bollinger mid, upper and lower bands over `n` closes, NaN-padded.
///
/// # Safety
/// `closes`, `mid`, `upper` and `lower` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn mlion_bollinger(closes: *const f64, n: usize, period: usize, k: f64, mid: *mut f64, upper: *mut f64, lower: *mut f64) -> MlionStatus {
    guard(|| {
        let series = close_series(slice(closes, n, "closes")?)?;
        let b = indicators::bollinger(&series, period, k)?;
        for (dst, src, name) in [(mid, &b.mid, "mid"), (upper, &b.upper, "upper"), (lower, &b.lower, "lower")] {
            let o = slice_mut(dst, n, name)?;
            o.fill(f64::NAN);
            o[b.offset..b.offset + src.len()].copy_from_slice(src);
        }
        Ok(())
    })
}

/// Weighted signal score; the weights must sum to one.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlion_score_signal(relevance: f64, recency: f64, credibility: f64, w_relevance: f64, w_recency: f64, w_credibility: f64, out: *mut f64) -> MlionStatus {
    guard(|| {
        let w = SignalWeights::new(w_relevance, w_recency, w_credibility);
        w.validate()?;
        *out_ptr(out)? = report::score_signal(relevance, recency, credibility, &w)?;
        Ok(())
    })
}

/// `logistic(theta . phi)` for vectors of length `n`.
///
/// # Safety
/// `theta` and `phi` must point to `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mlion_score_candidate(theta: *const f64, phi: *const f64, n: usize, out: *mut f64) -> MlionStatus {
    guard(|| {
        *out_ptr(out)? = recommend::score_candidate(slice(theta, n, "theta")?, slice(phi, n, "phi")?)?;
        Ok(())
    })
}

/// New fusion state. Writes the handle to `out`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlion_fusion_new(alpha0: f64, window: usize, delta: f64, step_down: f64, cadence: usize, out: *mut *mut MlionFusion) -> MlionStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        let config = FusionConfig { alpha0, window, delta, step_down, cadence };
        config.validate()?;
        *slot = Box::into_raw(Box::new(MlionFusion { state: FusionState::new(config) }));
        Ok(())
    })
}

/// Feeds one pair of track accuracies into the state.
///
/// # Safety
/// `handle` must come from [`mlion_fusion_new`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn mlion_fusion_update(handle: *mut MlionFusion, accuracy_llm: f64, accuracy_ml: f64) -> MlionStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        if !(accuracy_llm.is_finite() && accuracy_ml.is_finite()) {
            return Err(Fail(MlionStatus::InvalidArgument, "accuracies must be finite".into()));
        }
        h.state = forecast::update_fusion(&h.state, accuracy_llm, accuracy_ml);
        Ok(())
    })
}

/// Current LLM-track weight.
///
/// # Safety
/// `handle` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mlion_fusion_alpha(handle: *const MlionFusion, out: *mut f64) -> MlionStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        *out_ptr(out)? = h.state.alpha;
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`mlion_fusion_new`] or be null; it is invalid
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn mlion_fusion_free(handle: *mut MlionFusion) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// New zero-initialized policy of dimension five with learning rate `eta`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlion_policy_new(eta: f64, out: *mut *mut MlionPolicy) -> MlionStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Fail(MlionStatus::InvalidArgument, format!("eta must be positive, got {eta}")));
        }
        *slot = Box::into_raw(Box::new(MlionPolicy { weights: PolicyWeights::zeros(eta) }));
        Ok(())
    })
}

/// One online update from features `phi` (length `n`) and outcome `y`.
///
/// # Safety
/// `handle` must be live; `phi` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn mlion_policy_update(handle: *mut MlionPolicy, phi: *const f64, n: usize, y: f64) -> MlionStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        if !(0.0..=1.0).contains(&y) {
            return Err(Fail(MlionStatus::InvalidArgument, format!("outcome {y} outside [0, 1]")));
        }
        h.weights = recommend::update_policy(&h.weights, slice(phi, n, "phi")?, y)?;
        Ok(())
    })
}

/// Score of features `phi` under the handle's weights.
///
/// # Safety
/// `handle` must be live; `phi` must point to `n` values; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mlion_policy_score(handle: *const MlionPolicy, phi: *const f64, n: usize, out: *mut f64) -> MlionStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        *out_ptr(out)? = recommend::score_candidate(&h.weights.theta, slice(phi, n, "phi")?)?;
        Ok(())
    })
}

/// Copies the weights into `out`, which must hold `n` values; `n` must equal
/// the policy dimension.
///
/// # Safety
/// `handle` must be live; `out` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn mlion_policy_theta(handle: *const MlionPolicy, out: *mut f64, n: usize) -> MlionStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        let theta = &h.weights.theta;
        if n != theta.len() {
            return Err(Error::DimensionMismatch { expected: theta.len(), got: n }.into());
        }
        slice_mut(out, n, "out")?.copy_from_slice(theta);
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`mlion_policy_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn mlion_policy_free(handle: *mut MlionPolicy) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
