use std::collections::VecDeque;
use std::sync::Arc;

use dashmap::DashMap;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::types::ForecastSeries;
use crate::error::{Error, Result};
use crate::market_data::{Candle, Resolution, Track};

const EPS: f64 = 1e-6;

/// Convex combination `alpha * llm + (1 - alpha) * ml` of every OHLCV field.
pub fn fuse(llm: &ForecastSeries, ml: &ForecastSeries, alpha: f64) -> Result<ForecastSeries> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if llm.steps.len() != ml.steps.len() || llm.horizon != ml.horizon {
        return Err(Error::HorizonMismatch);
    }
    if llm.steps.iter().zip(&ml.steps).any(|(a, b)| a.t != b.t) {
        return Err(Error::HorizonMismatch);
    }
    let steps = if alpha == 1.0 {
        llm.steps.iter().map(|c| Candle { filled: false, ..*c }).collect()
    } else if alpha == 0.0 {
        ml.steps.iter().map(|c| Candle { filled: false, ..*c }).collect()
    } else {
        let mix = |a: f64, b: f64| alpha * a + (1.0 - alpha) * b;
        llm.steps
            .iter()
            .zip(&ml.steps)
            .map(|(a, b)| Candle::new(a.t, mix(a.o, b.o), mix(a.h, b.h), mix(a.l, b.l), mix(a.c, b.c), mix(a.v, b.v)))
            .collect()
    };
    Ok(ForecastSeries { steps, horizon: llm.horizon, track: Track::Fused })
}

/// Tunables of the adaptive weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    pub alpha0: f64,
    pub window: usize,
    pub delta: f64,
    pub step_down: f64,
    /// Recompute alpha after every `cadence` evaluations.
    pub cadence: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { alpha0: 0.5, window: 20, delta: 0.55, step_down: 0.05, cadence: 1 }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(m.to_string()));
        if !(0.0..=1.0).contains(&self.alpha0) {
            return bad("fusion.alpha0 must lie in [0, 1]");
        }
        if self.window == 0 {
            return bad("fusion.window must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("fusion.delta must lie in (0, 1)");
        }
        if !(self.step_down > 0.0 && self.step_down <= 1.0) {
            return bad("fusion.step_down must lie in (0, 1]");
        }
        if self.cadence == 0 {
            return bad("fusion.cadence must be positive");
        }
        Ok(())
    }
}

/// Current fusion weight plus rolling accuracy windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionState {
    pub alpha: f64,
    pub config: FusionConfig,
    pub llm: VecDeque<f64>,
    pub ml: VecDeque<f64>,
    pub overall: VecDeque<f64>,
    /// Accumulated step-down while the overall mean stays below `delta`.
    pub penalty: f64,
    pub evaluations: u64,
}

impl Default for FusionState {
    fn default() -> Self {
        FusionState::new(FusionConfig::default())
    }
}

fn push(window: &mut VecDeque<f64>, value: f64, cap: usize) {
    window.push_back(value);
    while window.len() > cap {
        window.pop_front();
    }
}

fn mean(window: &VecDeque<f64>) -> f64 {
    window.iter().sum::<f64>() / window.len() as f64
}

impl FusionState {
    pub fn new(config: FusionConfig) -> Self {
        FusionState {
            alpha: config.alpha0,
            config,
            llm: VecDeque::new(),
            ml: VecDeque::new(),
            overall: VecDeque::new(),
            penalty: 0.0,
            evaluations: 0,
        }
    }
}

/// [`update_fusion_with`] where the overall accuracy is the mean of the two
/// track accuracies.
pub fn update_fusion(state: &FusionState, a_llm: f64, a_ml: f64) -> FusionState {
    update_fusion_with(state, a_llm, a_ml, 0.5 * (a_llm + a_ml))
}

/// Pushes one evaluation into the rolling windows and, on cadence, sets
/// `alpha = mean_llm / (mean_llm + mean_ml)` (means clamped to `[1e-6, 1]`)
/// minus the accumulated step-down. The step-down grows by `step_down` for
/// every recompute where the overall rolling mean is below `delta` and resets
/// once it recovers.
pub fn update_fusion_with(state: &FusionState, a_llm: f64, a_ml: f64, overall: f64) -> FusionState {
    let mut next = state.clone();
    let cap = next.config.window.max(1);
    let sanitize = |x: f64| if x.is_finite() { x } else { 0.0 };
    push(&mut next.llm, sanitize(a_llm), cap);
    push(&mut next.ml, sanitize(a_ml), cap);
    push(&mut next.overall, sanitize(overall), cap);
    next.evaluations += 1;
    if !next.evaluations.is_multiple_of(next.config.cadence.max(1) as u64) {
        return next;
    }
    let m_llm = mean(&next.llm).clamp(EPS, 1.0);
    let m_ml = mean(&next.ml).clamp(EPS, 1.0);
    let base = m_llm / (m_llm + m_ml);
    if mean(&next.overall) < next.config.delta {
        next.penalty = (next.penalty + next.config.step_down).min(1.0);
    } else {
        next.penalty = 0.0;
    }
    next.alpha = (base - next.penalty).clamp(0.0, 1.0);
    next
}

/// Per `(symbol, resolution)` fusion states; updates for one key are
/// serialized, different keys proceed in parallel.
#[derive(Debug, Default)]
pub struct FusionRegistry {
    config: FusionConfig,
    states: DashMap<(String, Resolution), Arc<Mutex<FusionState>>>,
}

impl FusionRegistry {
    pub fn new(config: FusionConfig) -> Self {
        FusionRegistry { config, states: DashMap::new() }
    }

    pub fn slot(&self, symbol: &str, resolution: Resolution) -> Arc<Mutex<FusionState>> {
        self.states
            .entry((symbol.to_string(), resolution))
            .or_insert_with(|| Arc::new(Mutex::new(FusionState::new(self.config))))
            .clone()
    }

    pub fn get(&self, symbol: &str, resolution: Resolution) -> FusionState {
        self.slot(symbol, resolution).lock().clone()
    }

    pub fn insert(&self, symbol: &str, resolution: Resolution, state: FusionState) {
        *self.slot(symbol, resolution).lock() = state;
    }
}
