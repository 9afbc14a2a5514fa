use std::time::Duration;

use parking_lot::{Condvar, Mutex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::types::{ForecastInput, ForecastSeries};
use crate::error::{Error, Result};
use crate::market_data::{Candle, CandleSeries, Resolution, Timestamp, Track};
use crate::ml::{fit, predict_next, Dataset, ModelConfig, Target};
use crate::news::NewsItem;

/// What a track is asked to forecast. `history` is the series at the target
/// resolution, truncated at the issue time.
#[derive(Debug, Clone, Copy)]
pub struct ForecastRequest<'a> {
    pub symbol: &'a str,
    pub resolution: Resolution,
    pub horizon: usize,
    pub input: &'a ForecastInput,
    pub history: &'a CandleSeries,
    pub seed: u64,
}

impl ForecastRequest<'_> {
    fn last(&self) -> Result<&Candle> {
        self.history.last().ok_or(Error::InsufficientHistory { needed: 1, available: 0 })
    }

    fn step_time(&self, i: usize) -> Result<Timestamp> {
        Ok(self.last()?.t + self.resolution.step() * (i as i64 + 1))
    }
}

/// One forecasting track.
pub trait ForecastProvider: Send + Sync {
    fn name(&self) -> &str;

    fn forecast(&self, request: &ForecastRequest<'_>) -> Result<ForecastSeries>;

    /// Upper bound on simultaneous calls; `None` means unrestricted.
    fn max_concurrency(&self) -> Option<usize> {
        None
    }
}

/// Repeats the last observed candle, decaying volume by 10% per step.
/// A non-zero `noise` adds a seeded multiplicative perturbation to prices.
#[derive(Debug, Clone, Copy, Default)]
pub struct PersistenceProvider {
    pub noise: f64,
}

impl ForecastProvider for PersistenceProvider {
    fn name(&self) -> &str {
        "persistence"
    }

    fn forecast(&self, request: &ForecastRequest<'_>) -> Result<ForecastSeries> {
        let last = *request.last()?;
        let mut rng = ChaCha8Rng::seed_from_u64(request.seed);
        let mut steps = Vec::with_capacity(request.horizon);
        for i in 0..request.horizon {
            let t = request.step_time(i)?;
            let v = last.v * 0.9f64.powi(i as i32 + 1);
            let mut c = Candle::new(t, last.o, last.h, last.l, last.c, v);
            if self.noise > 0.0 {
                let k = 1.0 + rng.gen_range(-self.noise..=self.noise);
                c.o *= k;
                c.h *= k;
                c.l *= k;
                c.c *= k;
            }
            steps.push(c);
        }
        Ok(ForecastSeries::new(steps, Track::Llm))
    }
}

/// Fits a next-OHLCV regressor on the target-resolution history and rolls
/// it forward one step at a time.
#[derive(Debug, Clone)]
pub struct MlTrackProvider {
    pub config: ModelConfig,
    /// Most recent candles used for fitting; 0 means all.
    pub train_window: usize,
}

impl Default for MlTrackProvider {
    fn default() -> Self {
        MlTrackProvider { config: ModelConfig::ridge(0.01).with_target(Target::NextOhlcv).standardized(), train_window: 0 }
    }
}

impl ForecastProvider for MlTrackProvider {
    fn name(&self) -> &str {
        "ml"
    }

    fn forecast(&self, request: &ForecastRequest<'_>) -> Result<ForecastSeries> {
        let candles = &request.history.candles;
        let start = if self.train_window == 0 { 0 } else { candles.len().saturating_sub(self.train_window) };
        let train = CandleSeries::new(request.symbol, request.resolution, candles[start..].to_vec())?;
        let config = self.config.with_target(Target::NextOhlcv);
        let dataset = Dataset::from_series(&train, Target::NextOhlcv)?;
        if dataset.len() < 2 {
            return Err(Error::InsufficientHistory { needed: 3, available: train.len() });
        }
        let model = fit(&dataset, config)?;
        let mut current = *request.last()?;
        let mut steps = Vec::with_capacity(request.horizon);
        for i in 0..request.horizon {
            let x = crate::ml::engineer_features(&current);
            let y = predict_next(&model, x.as_slice())?;
            current = Candle::new(request.step_time(i)?, y[0], y[1], y[2], y[3], y[4]);
            steps.push(current);
        }
        Ok(ForecastSeries::new(steps, Track::Ml))
    }
}

#[derive(Debug, Serialize)]
struct HttpNews<'a> {
    historical: &'a [NewsItem],
    realtime: &'a [NewsItem],
}

#[derive(Debug, Serialize)]
struct HttpRequestBody<'a> {
    symbol: &'a str,
    resolution: Resolution,
    horizon: usize,
    candles_14d: &'a [Candle],
    candles_48h: &'a [Candle],
    news: HttpNews<'a>,
    gamma: f64,
    t0: Timestamp,
}

#[derive(Debug, Deserialize)]
struct HttpStep {
    t: Timestamp,
    o: f64,
    h: f64,
    l: f64,
    c: f64,
    v: f64,
}

#[derive(Debug, Deserialize)]
struct HttpResponseBody {
    steps: Vec<HttpStep>,
}

/// Remote forecaster reached by `POST {url}` with a JSON request; answers
/// `{"steps": [{t,o,h,l,c,v}, ...]}`.
#[derive(Debug, Clone)]
pub struct HttpForecastProvider {
    pub url: String,
    pub timeout: Duration,
    pub retries: u32,
    pub concurrency: Option<usize>,
    pub track: Track,
}

impl HttpForecastProvider {
    pub fn new(url: impl Into<String>, timeout: Duration, retries: u32) -> Self {
        HttpForecastProvider { url: url.into(), timeout, retries, concurrency: None, track: Track::Llm }
    }

    fn unavailable(&self, reason: impl ToString) -> Error {
        Error::ProviderUnavailable { track: self.track.to_string(), reason: reason.to_string() }
    }

    fn call(&self, client: &reqwest::blocking::Client, body: &HttpRequestBody<'_>) -> Result<HttpResponseBody> {
        let response = client.post(&self.url).json(body).send().map_err(|e| self.unavailable(e))?;
        if !response.status().is_success() {
            return Err(self.unavailable(format!("HTTP {}", response.status())));
        }
        response.json::<HttpResponseBody>().map_err(|e| self.unavailable(e))
    }
}

impl ForecastProvider for HttpForecastProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn max_concurrency(&self) -> Option<usize> {
        self.concurrency
    }

    fn forecast(&self, request: &ForecastRequest<'_>) -> Result<ForecastSeries> {
        let client = reqwest::blocking::Client::builder().timeout(self.timeout).build().map_err(|e| self.unavailable(e))?;
        let input = request.input;
        let body = HttpRequestBody {
            symbol: request.symbol,
            resolution: request.resolution,
            horizon: request.horizon,
            candles_14d: &input.x_14d.candles,
            candles_48h: &input.x_48h.candles,
            news: HttpNews { historical: &input.news_hist, realtime: &input.news_realtime },
            gamma: input.gamma,
            t0: input.t0,
        };
        let mut last_err = None;
        for _ in 0..=self.retries {
            match self.call(&client, &body) {
                Ok(resp) => {
                    let steps: Vec<Candle> = resp.steps.into_iter().map(|s| Candle::new(s.t, s.o, s.h, s.l, s.c, s.v)).collect();
                    let series = ForecastSeries::new(steps, self.track);
                    if series.horizon != request.horizon {
                        return Err(Error::HorizonMismatch);
                    }
                    return Ok(series);
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| self.unavailable("no attempt made")))
    }
}

/// Counting gate honoring a provider's declared concurrency limit.
#[derive(Debug)]
pub struct Gate {
    limit: Option<usize>,
    in_use: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    pub fn new(limit: Option<usize>) -> Self {
        Gate { limit: limit.map(|l| l.max(1)), in_use: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        let Some(limit) = self.limit else { return f() };
        {
            let mut n = self.in_use.lock();
            while *n >= limit {
                self.freed.wait(&mut n);
            }
            *n += 1;
        }
        struct Release<'a>(&'a Gate);
        impl Drop for Release<'_> {
            fn drop(&mut self) {
                *self.0.in_use.lock() -= 1;
                self.0.freed.notify_one();
            }
        }
        let _release = Release(self);
        f()
    }
}

/// A provider plus the gate derived from its concurrency limit.
pub struct GatedProvider {
    provider: Box<dyn ForecastProvider>,
    gate: Gate,
}

impl GatedProvider {
    pub fn new(provider: Box<dyn ForecastProvider>) -> Self {
        let gate = Gate::new(provider.max_concurrency());
        GatedProvider { provider, gate }
    }

    pub fn name(&self) -> &str {
        self.provider.name()
    }

    pub fn forecast(&self, request: &ForecastRequest<'_>) -> Result<ForecastSeries> {
        self.gate.run(|| self.provider.forecast(request))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::types::{build_input, SeriesSet, DAY};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    const T0: Timestamp = 1_710_028_800;

    fn trending(resolution: Resolution, n: usize, end: Timestamp) -> CandleSeries {
        let step = resolution.step();
        let candles = (0..n)
            .map(|i| {
                let t = end - step * (n - 1 - i) as i64;
                let c = 100.0 + i as f64;
                Candle::new(t, c - 0.5, c + 1.0, c - 1.5, c, 1000.0 + i as f64)
            })
            .collect();
        CandleSeries::new("X", resolution, candles).unwrap()
    }

    fn input() -> (ForecastInput, CandleSeries) {
        let daily = trending(Resolution::OneDay, 40, T0);
        let set = SeriesSet::new([daily.clone(), trending(Resolution::OneHour, 60, T0)]);
        (build_input(&set, &[], 0.5, T0).unwrap(), daily)
    }

    #[test]
    fn persistence_repeats_last() {
        let (input, daily) = input();
        let req = ForecastRequest { symbol: "X", resolution: Resolution::OneDay, horizon: 2, input: &input, history: &daily, seed: 7 };
        let out = PersistenceProvider::default().forecast(&req).unwrap();
        let last = daily.last().unwrap();
        assert_eq!(out.horizon, 2);
        assert_eq!(out.steps[0].t, T0 + DAY);
        assert_eq!(out.steps[1].c, last.c);
        assert!((out.steps[0].v - last.v * 0.9).abs() < 1e-9);
        assert!((out.steps[1].v - last.v * 0.81).abs() < 1e-9);
        out.validate(T0, Resolution::OneDay).unwrap();
    }

    #[test]
    fn noisy_persistence_is_seeded() {
        let (input, daily) = input();
        let p = PersistenceProvider { noise: 0.01 };
        let req = |seed| ForecastRequest { symbol: "X", resolution: Resolution::OneDay, horizon: 3, input: &input, history: &daily, seed };
        assert_eq!(p.forecast(&req(1)).unwrap(), p.forecast(&req(1)).unwrap());
        assert_ne!(p.forecast(&req(1)).unwrap(), p.forecast(&req(2)).unwrap());
    }

    #[test]
    fn ml_track_extrapolates_trend() {
        let (input, daily) = input();
        let req = ForecastRequest { symbol: "X", resolution: Resolution::OneDay, horizon: 2, input: &input, history: &daily, seed: 0 };
        let out = MlTrackProvider::default().forecast(&req).unwrap();
        out.validate(T0, Resolution::OneDay).unwrap();
        assert_eq!(out.track, Track::Ml);
        assert!((out.steps[0].c - 140.0).abs() < 0.5, "{}", out.steps[0].c);
        assert!(out.steps.iter().all(Candle::is_consistent));
    }

    #[test]
    fn http_provider_unreachable() {
        let (input, daily) = input();
        let req = ForecastRequest { symbol: "X", resolution: Resolution::OneDay, horizon: 2, input: &input, history: &daily, seed: 0 };
        let p = HttpForecastProvider::new("http://127.0.0.1:9/forecast", Duration::from_millis(200), 1);
        assert!(matches!(p.forecast(&req), Err(Error::ProviderUnavailable { track, .. }) if track == "LLM"));
    }

    #[test]
    fn gate_limits_concurrency() {
        let gate = Arc::new(Gate::new(Some(2)));
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let (gate, active, peak) = (gate.clone(), active.clone(), peak.clone());
                s.spawn(move || {
                    gate.run(|| {
                        let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                        peak.fetch_max(now, Ordering::SeqCst);
                        std::thread::sleep(Duration::from_millis(10));
                        active.fetch_sub(1, Ordering::SeqCst);
                    })
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
