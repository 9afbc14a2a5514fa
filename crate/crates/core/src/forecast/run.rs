use serde::{Deserialize, Serialize};

use super::fusion::{fuse, update_fusion_with, FusionState};
use super::metrics::{mean_accuracy, win_rate};
use super::provider::{ForecastRequest, GatedProvider};
use super::summary::{render_summary, SummaryInput, TemplateSet};
use super::types::{build_input, ForecastSeries, HorizonTable, SeriesSet};
use crate::error::{Error, Result};
use crate::market_data::{store_prediction, CandleSeries, PredictionRecord, PredictionStore, RecordId, Resolution, Timestamp, Track};
use crate::news::NewsItem;

/// The two forecasting tracks.
pub struct Tracks {
    pub llm: GatedProvider,
    pub ml: GatedProvider,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastOptions {
    pub horizons: HorizonTable,
    pub gamma: f64,
    pub seed: u64,
    pub template: String,
}

impl Default for ForecastOptions {
    fn default() -> Self {
        ForecastOptions { horizons: HorizonTable::default(), gamma: 0.5, seed: 0, template: "default".into() }
    }
}

/// Realized-price metrics, available when the series already covers the
/// forecast horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub accuracy_llm: Option<f64>,
    pub accuracy_ml: Option<f64>,
    pub accuracy_fused: f64,
    pub win_rate_llm: Option<f64>,
    pub win_rate_ml: Option<f64>,
    pub win_rate_fused: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    pub failed: Track,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastOutcome {
    pub symbol: String,
    pub resolution: Resolution,
    pub issued_at: Timestamp,
    /// Weight actually applied to the LLM track.
    pub alpha: f64,
    pub degraded: Option<Degradation>,
    pub llm: Option<ForecastSeries>,
    pub ml: Option<ForecastSeries>,
    pub fused: ForecastSeries,
    pub records: Vec<String>,
    pub metrics: Option<ForecastMetrics>,
    pub summary: String,
}

fn relevant_news(news: &[NewsItem], symbol: &str) -> Vec<NewsItem> {
    news.iter().filter(|n| n.tokens_mentioned.is_empty() || n.tokens_mentioned.contains(symbol)).cloned().collect()
}

fn track_metrics(series: &ForecastSeries, actual: &[f64], anchor: f64) -> Result<(f64, f64)> {
    let closes = series.closes();
    Ok((mean_accuracy(&closes, actual)?, win_rate(&closes, actual, anchor)?))
}

/// Forecasts `symbol` at `resolution` from issue time `t0` (default: the last
/// candle), fuses the two tracks with `state.alpha`, stores one record per
/// produced series and, when realized candles already exist, scores the
/// forecast and feeds the accuracies back into `state`.
///
/// A failing track degrades the run to the surviving one (alpha forced to 0
/// or 1); the state is then left unchanged.
#[allow(clippy::too_many_arguments)]
pub fn run_forecast(
    set: &SeriesSet,
    news: &[NewsItem],
    tracks: &Tracks,
    store: &dyn PredictionStore,
    state: &mut FusionState,
    symbol: &str,
    resolution: Resolution,
    t0: Option<Timestamp>,
    options: &ForecastOptions,
) -> Result<ForecastOutcome> {
    let target = set.get(resolution)?;
    if target.symbol != symbol {
        return Err(Error::UnknownSymbol(symbol.to_string()));
    }
    let requested = t0.or(target.last_time()).ok_or(Error::InsufficientHistory { needed: 2, available: 0 })?;
    let issued_at = target.latest_at_or_before(requested).ok_or(Error::InsufficientHistory { needed: 2, available: 0 })?;
    let news = relevant_news(news, symbol);
    let input = build_input(set, &news, options.gamma, issued_at)?;
    let history = CandleSeries::new(symbol, resolution, target.slice_between(i64::MIN, issued_at).to_vec())?;
    let horizon = options.horizons.steps(resolution);
    if horizon == 0 {
        return Err(Error::InvalidArgument(format!("horizon for {resolution} is zero")));
    }
    let request = ForecastRequest { symbol, resolution, horizon, input: &input, history: &history, seed: options.seed };

    let check = |r: Result<ForecastSeries>, track: Track| {
        r.and_then(|mut s| {
            s.validate(issued_at, resolution)?;
            s.track = track;
            Ok(s)
        })
    };
    let (llm, ml) = std::thread::scope(|scope| {
        let llm = scope.spawn(|| check(tracks.llm.forecast(&request), Track::Llm));
        let ml = check(tracks.ml.forecast(&request), Track::Ml);
        (llm.join().unwrap_or_else(|_| Err(Error::ProviderUnavailable { track: "LLM".into(), reason: "panicked".into() })), ml)
    });

    let (alpha, degraded, fused) = match (&llm, &ml) {
        (Ok(l), Ok(m)) => (state.alpha, None, fuse(l, m, state.alpha)?),
        (Err(e), Ok(m)) => (0.0, Some(Degradation { failed: Track::Llm, reason: e.to_string() }), fuse(m, m, 0.0)?),
        (Ok(l), Err(e)) => (1.0, Some(Degradation { failed: Track::Ml, reason: e.to_string() }), fuse(l, l, 1.0)?),
        (Err(a), Err(b)) => {
            return Err(Error::ProviderUnavailable { track: "LLM+ML".into(), reason: format!("{a}; {b}") });
        }
    };
    let llm = llm.ok();
    let ml = ml.ok();

    let mut records = Vec::new();
    for series in [llm.as_ref(), ml.as_ref(), Some(&fused)].into_iter().flatten() {
        let record = PredictionRecord {
            symbol: symbol.to_string(),
            resolution,
            issued_at,
            horizon_steps: series.horizon,
            predicted: series.steps.clone(),
            source: series.track,
        };
        let id: RecordId = store_prediction(&record, store)?;
        records.push(id.to_string());
    }

    let anchor = history.last().map(|c| c.c);
    let realized = target.slice_between(issued_at, issued_at + resolution.step() * horizon as i64);
    let metrics = match anchor {
        Some(anchor) if realized.len() == horizon => {
            let actual: Vec<f64> = realized.iter().map(|c| c.c).collect();
            let (acc_f, win_f) = track_metrics(&fused, &actual, anchor)?;
            let l = llm.as_ref().map(|s| track_metrics(s, &actual, anchor)).transpose()?;
            let m = ml.as_ref().map(|s| track_metrics(s, &actual, anchor)).transpose()?;
            if let (Some((acc_l, _)), Some((acc_m, _))) = (l, m) {
                *state = update_fusion_with(state, acc_l, acc_m, acc_f);
            }
            Some(ForecastMetrics {
                accuracy_llm: l.map(|x| x.0),
                accuracy_ml: m.map(|x| x.0),
                accuracy_fused: acc_f,
                win_rate_llm: l.map(|x| x.1),
                win_rate_ml: m.map(|x| x.1),
                win_rate_fused: win_f,
            })
        }
        _ => None,
    };

    let all_news: Vec<NewsItem> = input.all_news().cloned().collect();
    let summary = render_summary(
        &SummaryInput {
            symbol,
            resolution,
            issued_at,
            forecast: &fused,
            anchor_close: anchor,
            alpha,
            win_rate: metrics.map(|m| m.win_rate_fused),
            accuracy: metrics.map(|m| m.accuracy_fused),
            news: &all_news,
        },
        TemplateSet::builtin(),
        &options.template,
    )?;

    Ok(ForecastOutcome { symbol: symbol.to_string(), resolution, issued_at, alpha, degraded, llm, ml, fused, records, metrics, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::provider::{ForecastProvider, MlTrackProvider, PersistenceProvider};
    use crate::market_data::{load_predictions, Candle, MemoryPredictionStore};

    const T_END: Timestamp = 1_710_028_800;

    fn wave(resolution: Resolution, n: usize, end: Timestamp) -> CandleSeries {
        let step = resolution.step();
        let candles = (0..n)
            .map(|i| {
                let t = end - step * (n - 1 - i) as i64;
                let c = 100.0 + (i as f64 * 0.3).sin() * 5.0 + i as f64 * 0.1;
                Candle::new(t, c - 0.2, c + 1.0, c - 1.0, c, 500.0 + i as f64)
            })
            .collect();
        CandleSeries::new("BTC", resolution, candles).unwrap()
    }

    fn set() -> SeriesSet {
        SeriesSet::new([wave(Resolution::OneDay, 60, T_END), wave(Resolution::OneHour, 24 * 14, T_END)])
    }

    struct Failing;
    impl ForecastProvider for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn forecast(&self, _: &ForecastRequest<'_>) -> Result<ForecastSeries> {
            Err(Error::ProviderUnavailable { track: "LLM".into(), reason: "down".into() })
        }
    }

    fn tracks(llm: Box<dyn ForecastProvider>) -> Tracks {
        Tracks { llm: GatedProvider::new(llm), ml: GatedProvider::new(Box::new(MlTrackProvider::default())) }
    }

    #[test]
    fn three_records_and_alpha_zero_equals_ml() {
        let store = MemoryPredictionStore::new();
        let mut state = FusionState { alpha: 0.0, ..FusionState::default() };
        let t = tracks(Box::new(PersistenceProvider::default()));
        let out = run_forecast(&set(), &[], &t, &store, &mut state, "BTC", Resolution::OneDay, None, &ForecastOptions::default()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(store.count(), 3);
        assert_eq!(out.fused.steps, out.ml.as_ref().unwrap().steps);
        assert!(out.metrics.is_none());
        let loaded = load_predictions("BTC", Resolution::OneDay, T_END..=T_END, &store).unwrap();
        let sources: Vec<Track> = loaded.iter().map(|r| r.source).collect();
        assert_eq!(sources, vec![Track::Llm, Track::Ml, Track::Fused]);
    }

    #[test]
    fn degraded_llm() {
        let store = MemoryPredictionStore::new();
        let mut state = FusionState::default();
        let t = tracks(Box::new(Failing));
        let out = run_forecast(&set(), &[], &t, &store, &mut state, "BTC", Resolution::OneDay, None, &ForecastOptions::default()).unwrap();
        assert_eq!(out.degraded.as_ref().unwrap().failed, Track::Llm);
        assert_eq!(out.alpha, 0.0);
        assert_eq!(out.fused.steps, out.ml.as_ref().unwrap().steps);
        assert_eq!(store.count(), 2);
    }

    #[test]
    fn backtest_updates_state_and_is_reproducible() {
        let t = tracks(Box::new(PersistenceProvider { noise: 0.01 }));
        let origin = T_END - 10 * 86_400;
        let go = || {
            let store = MemoryPredictionStore::new();
            let mut state = FusionState::default();
            let out = run_forecast(&set(), &[], &t, &store, &mut state, "BTC", Resolution::OneDay, Some(origin), &ForecastOptions { seed: 42, ..Default::default() })
                .unwrap();
            (out, state)
        };
        let (a, sa) = go();
        let (b, sb) = go();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert!(a.metrics.is_some());
        assert_eq!(sa.evaluations, 1);
        assert!(a.summary.contains("Win rate"));
    }

    #[test]
    fn unknown_symbol() {
        let store = MemoryPredictionStore::new();
        let t = tracks(Box::new(PersistenceProvider::default()));
        let r = run_forecast(&set(), &[], &t, &store, &mut FusionState::default(), "ETH", Resolution::OneDay, None, &ForecastOptions::default());
        assert!(matches!(r, Err(Error::UnknownSymbol(_))));
    }
}
