use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::config::ApiConfig;
use crate::error::{Error, Result};
use crate::forecast::{
    run_forecast, ForecastOptions, ForecastOutcome, FusionRegistry, FusionState, GatedProvider, HttpForecastProvider, MlTrackProvider,
    PersistenceProvider, SeriesSet, Tracks,
};
use crate::horizon::Horizon;
use crate::market_data::{
    window, CandleFormat, CandleSeries, CandleStore, FilePredictionStore, IngestOptions, PredictionRecord, PredictionStore, Resolution, Timestamp,
    Track,
};
use crate::ml::ModelConfig;
use crate::news::{annotate, build_graph, filter_recent, parse_news_jsonl, parse_rss, Gazetteer, GazetteerNer, LexiconSentiment, NewsItem};
use crate::recommend::{
    parse_intent, recommend, replay, Categories, ExtractiveSummary, FeedbackEvent, FeedbackLoop, IntentDefaults, IntentProvider, IntentRequest,
    KeywordIntent, PolicyWeights, RecommendContext, Recommendation, RecommendationStore,
};
use crate::report::{
    CredibilityTable, FeedItem, FixtureRetriever, HttpRetriever, NoRetrieval, ReportInputs, ReportPipeline, ReportRun, Retriever, SentenceDedupe,
    SignalPolicy,
};

/// Files under the data directory.
#[derive(Debug, Clone)]
pub struct DataLayout {
    pub root: PathBuf,
}

impl DataLayout {
    pub fn candles(&self) -> PathBuf {
        self.root.join("candles")
    }
    pub fn predictions(&self) -> PathBuf {
        self.root.join("predictions")
    }
    pub fn news(&self) -> PathBuf {
        self.root.join("news.jsonl")
    }
    pub fn feed(&self, kind: FeedKind) -> PathBuf {
        self.root.join(format!("{}.jsonl", kind.label()))
    }
    pub fn fusion(&self, symbol: &str, resolution: Resolution) -> PathBuf {
        self.root.join("fusion").join(format!("{}_{}.json", symbol.to_ascii_uppercase(), resolution.label()))
    }
    pub fn feedback(&self) -> PathBuf {
        self.root.join("feedback.jsonl")
    }
    pub fn recommendations(&self) -> PathBuf {
        self.root.join("recommendations.jsonl")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedKind {
    Flows,
    Social,
}

impl FeedKind {
    pub fn label(self) -> &'static str {
        match self {
            FeedKind::Flows => "flows",
            FeedKind::Social => "social",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoinInfo {
    pub symbol: String,
    pub resolutions: Vec<Resolution>,
    pub last_time: Option<Timestamp>,
    pub last_close: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub user: String,
    pub recommendation: String,
    pub item: String,
    /// 1 click, 0 ignore, or a rating normalized to [0, 1].
    pub outcome: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackAck {
    pub seq: u64,
    pub user: String,
    pub theta: Vec<f64>,
    pub policy_version: u64,
    pub updated_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub events: usize,
    pub users: BTreeMap<String, Vec<f64>>,
    /// Whether every replayed vector equals the live one bit for bit.
    pub matches_online: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatRequest {
    pub session_id: String,
    pub message: String,
    #[serde(default)]
    pub user: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRoute {
    Report,
    Recommendation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatReply {
    pub session_id: String,
    pub route: ChatRoute,
    pub reply: String,
    pub provenance: Vec<String>,
    pub generated_at: Timestamp,
    pub payload: serde_json::Value,
}

const RECOMMEND_WORDS: [&str; 8] = ["recommend", "recommendation", "recommendations", "suggest", "picks", "ideas", "news", "opportunities"];
const DEFAULT_USER: &str = "anonymous";

/// Every operation behind the CLI and the HTTP API. Holds only the declared
/// stores and process-local caches.
pub struct Engine {
    config: ApiConfig,
    layout: DataLayout,
    clock: Arc<dyn Clock>,
    candles: CandleStore,
    predictions: FilePredictionStore,
    fusion: FusionRegistry,
    tracks: Tracks,
    report: ReportPipeline,
    feedback: FeedbackLoop,
    recommendations: RecommendationStore,
    news_lock: Mutex<()>,
}

fn storage(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::StorageUnavailable(format!("{}: {e}", path.display()))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(storage(path, e)),
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::MalformedRow { line: n + 1, reason: e.to_string() }))
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, out).map_err(|e| storage(path, e))?;
    fs::rename(&tmp, path).map_err(|e| storage(path, e))
}

impl Engine {
    pub fn open(config: ApiConfig, clock: Arc<dyn Clock>) -> Result<Self> {
        config.validate()?;
        let layout = DataLayout { root: config.data_dir.clone() };
        fs::create_dir_all(&layout.root).map_err(|e| storage(&layout.root, e))?;
        let candles = CandleStore::open(layout.candles())?;
        let predictions = FilePredictionStore::open(layout.predictions())?;
        let f = &config.forecast;
        let llm: Box<dyn crate::forecast::ForecastProvider> = match &f.llm.url {
            Some(url) => Box::new(HttpForecastProvider {
                concurrency: f.llm.concurrency,
                ..HttpForecastProvider::new(url, Duration::from_millis(f.llm.timeout_ms), f.llm.retries)
            }),
            None => Box::new(PersistenceProvider { noise: f.stub_noise }),
        };
        let ml = MlTrackProvider { config: ModelConfig::ridge(f.ridge_alpha).standardized(), train_window: f.train_window };
        let tracks = Tracks { llm: GatedProvider::new(llm), ml: GatedProvider::new(Box::new(ml)) };

        let r = &config.retriever;
        let retriever: Box<dyn Retriever> = match (&r.provider.url, &r.fixture) {
            (Some(url), _) => Box::new(HttpRetriever::new(url, Duration::from_millis(r.provider.timeout_ms), r.provider.retries)),
            (None, Some(path)) => Box::new(FixtureRetriever::from_file(path)?),
            (None, None) => Box::new(NoRetrieval),
        };
        let mut report = ReportPipeline::new(clock.clone(), Box::new(SentenceDedupe), retriever).with_ttl(config.cache);
        let s = &config.signals;
        report.signals = SignalPolicy { weights: s.weights, threshold: s.threshold, top_k: s.top_k, recency_lambda: s.recency_lambda };
        report.gamma = f.gamma;
        report.windows = config.news.windows;

        let feedback = FeedbackLoop::open(layout.feedback(), PolicyWeights::zeros(config.recommend.eta))?;
        let recommendations = RecommendationStore::open(layout.recommendations())?;
        Ok(Engine {
            fusion: FusionRegistry::new(config.fusion),
            config,
            layout,
            clock,
            candles,
            predictions,
            tracks,
            report,
            feedback,
            recommendations,
            news_lock: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &ApiConfig {
        &self.config
    }

    pub fn layout(&self) -> &DataLayout {
        &self.layout
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn prediction_store(&self) -> &dyn PredictionStore {
        &self.predictions
    }

    // ---- ingestion ----

    pub fn ingest_candles(&self, path: &Path, format: Option<CandleFormat>, symbol: &str, resolution: Resolution, allow_gaps: bool) -> Result<CandleSeries> {
        let format = match format {
            Some(f) => f,
            None => match path.extension().and_then(|e| e.to_str()) {
                Some("jsonl") | Some("ndjson") => CandleFormat::Jsonl,
                _ => CandleFormat::Csv,
            },
        };
        let file = fs::File::open(path).map_err(|e| storage(path, e))?;
        let series = crate::market_data::ingest_candles(file, format, &symbol.to_ascii_uppercase(), resolution, IngestOptions { allow_gaps })?;
        self.candles.save(&series)?;
        Ok(series)
    }

    /// Parses (RSS when the file looks like XML, JSONL otherwise), annotates
    /// and merges news into the store by id. Returns the number of new items.
    pub fn ingest_news(&self, path: &Path) -> Result<usize> {
        let text = fs::read_to_string(path).map_err(|e| storage(path, e))?;
        let g = Gazetteer::builtin();
        let mut items = if text.trim_start().starts_with('<') { parse_rss(&text, g)? } else { parse_news_jsonl(&text, g)? };
        annotate(&mut items, self.config.news.tau, &LexiconSentiment, &GazetteerNer)?;
        let _g = self.news_lock.lock();
        let mut all: BTreeMap<String, NewsItem> = read_jsonl::<NewsItem>(&self.layout.news())?.into_iter().map(|n| (n.id.clone(), n)).collect();
        let before = all.len();
        for item in items {
            all.insert(item.id.clone(), item);
        }
        let added = all.len() - before;
        let mut rows: Vec<NewsItem> = all.into_values().collect();
        rows.sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.id.cmp(&b.id)));
        write_jsonl(&self.layout.news(), &rows)?;
        Ok(added)
    }

    pub fn ingest_feed(&self, kind: FeedKind, path: &Path) -> Result<usize> {
        if !path.exists() {
            return Err(storage(path, "not found"));
        }
        let items: Vec<FeedItem> = read_jsonl(path)?;
        let mut all: Vec<FeedItem> = read_jsonl(&self.layout.feed(kind))?;
        all.extend(items.iter().cloned());
        all.sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.source.cmp(&b.source)).then_with(|| a.text.cmp(&b.text)));
        all.dedup();
        write_jsonl(&self.layout.feed(kind), &all)?;
        Ok(items.len())
    }

    pub fn news(&self) -> Result<Vec<NewsItem>> {
        let _g = self.news_lock.lock();
        read_jsonl(&self.layout.news())
    }

    fn feed(&self, kind: FeedKind) -> Result<Vec<FeedItem>> {
        read_jsonl(&self.layout.feed(kind))
    }

    // ---- market data ----

    pub fn series(&self, symbol: &str, resolution: Resolution) -> Result<CandleSeries> {
        self.candles.load(symbol, resolution)
    }

    /// Stored candles, optionally cut to the window of `span_secs` ending at
    /// `end`, or to the closed range `[from, to]`.
    pub fn klines(&self, symbol: &str, resolution: Resolution, range: KlineRange) -> Result<CandleSeries> {
        let series = self.series(symbol, resolution)?;
        match range {
            KlineRange::All => Ok(series),
            KlineRange::Window { end, span } => window(&series, end, span),
            KlineRange::Between { from, to } => {
                let candles = series.slice_between(from.saturating_sub(1), to).to_vec();
                CandleSeries::new(series.symbol, resolution, candles)
            }
        }
    }

    pub fn coins(&self) -> Result<Vec<CoinInfo>> {
        self.candles
            .symbols()?
            .into_iter()
            .map(|symbol| {
                let resolutions = self.candles.resolutions(&symbol);
                let last = resolutions.first().map(|r| self.series(&symbol, *r)).transpose()?;
                let last = last.as_ref().and_then(|s| s.last().copied());
                Ok(CoinInfo { symbol, resolutions, last_time: last.map(|c| c.t), last_close: last.map(|c| c.c) })
            })
            .collect()
    }

    pub fn predictions(&self, symbol: &str, resolution: Resolution, from: Option<Timestamp>, to: Option<Timestamp>) -> Result<Vec<PredictionRecord>> {
        let symbol = symbol.to_ascii_uppercase();
        if self.candles.resolutions(&symbol).is_empty() {
            return Err(Error::UnknownSymbol(symbol));
        }
        crate::market_data::load_predictions(&symbol, resolution, from.unwrap_or(i64::MIN)..=to.unwrap_or(i64::MAX), &self.predictions)
    }

    // ---- forecasting ----

    pub fn fusion_state(&self, symbol: &str, resolution: Resolution) -> Result<FusionState> {
        let path = self.layout.fusion(symbol, resolution);
        match fs::read_to_string(&path) {
            Ok(text) => Ok(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(FusionState::new(self.config.fusion)),
            Err(e) => Err(storage(&path, e)),
        }
    }

    fn save_fusion_state(&self, symbol: &str, resolution: Resolution, state: &FusionState) -> Result<()> {
        let path = self.layout.fusion(symbol, resolution);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| storage(dir, e))?;
        }
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(state)?).map_err(|e| storage(&path, e))?;
        fs::rename(&tmp, &path).map_err(|e| storage(&path, e))
    }

    /// Runs one forecast. Runs for the same (symbol, resolution) are
    /// serialized; the fusion state is persisted after each run.
    pub fn forecast(&self, symbol: &str, resolution: Resolution, t0: Option<Timestamp>, seed: Option<u64>) -> Result<ForecastOutcome> {
        let symbol = symbol.to_ascii_uppercase();
        let available = self.candles.resolutions(&symbol);
        if available.is_empty() {
            return Err(Error::UnknownSymbol(symbol));
        }
        let set = SeriesSet::new(available.iter().map(|r| self.series(&symbol, *r)).collect::<Result<Vec<_>>>()?);
        let news = self.news()?;
        let f = &self.config.forecast;
        let options = ForecastOptions { horizons: f.horizons, gamma: f.gamma, seed: seed.unwrap_or(0), template: f.template.clone() };

        let slot = self.fusion.slot(&symbol, resolution);
        let mut guard = slot.lock();
        *guard = self.fusion_state(&symbol, resolution)?;
        let mut state = guard.clone();
        let outcome = run_forecast(&set, &news, &self.tracks, &self.predictions, &mut state, &symbol, resolution, t0, &options)?;
        self.save_fusion_state(&symbol, resolution, &state)?;
        *guard = state;
        if let Some(d) = &outcome.degraded {
            tracing::warn!(%symbol, %resolution, track = %d.failed, reason = %d.reason, "forecast degraded to a single track");
        }
        Ok(outcome)
    }

    // ---- reports ----

    /// Latest fused daily forecast on record, fed to the recommendation agent.
    fn latest_fused(&self, symbol: &str) -> Result<Option<crate::forecast::ForecastSeries>> {
        let records = crate::market_data::load_predictions(symbol, Resolution::OneDay, i64::MIN..=self.now(), &self.predictions)?;
        Ok(records
            .into_iter()
            .rev()
            .find(|r| r.source == Track::Fused)
            .map(|r| crate::forecast::ForecastSeries::new(r.predicted, Track::Fused)))
    }

    pub fn report(&self, symbol: &str, horizon: Horizon) -> Result<ReportRun> {
        let symbol = symbol.to_ascii_uppercase();
        let series = self.series(&symbol, Resolution::OneDay)?;
        let now = self.now();
        let series = CandleSeries::new(&symbol, Resolution::OneDay, series.slice_between(i64::MIN, now).to_vec())?;
        let news: Vec<NewsItem> =
            self.news()?.into_iter().filter(|n| n.tokens_mentioned.is_empty() || n.tokens_mentioned.contains(&symbol)).collect();
        let mut flows = self.feed(FeedKind::Flows)?;
        let mut social = self.feed(FeedKind::Social)?;
        flows.retain(|f| f.concerns(&symbol));
        social.retain(|f| f.concerns(&symbol));
        let forecast = self.latest_fused(&symbol)?;
        let run = self.report.run(&ReportInputs {
            symbol: &symbol,
            horizon,
            series: &series,
            news: &news,
            flows: &flows,
            social: &social,
            forecast: forecast.as_ref(),
        })?;
        for w in &run.warnings {
            tracing::warn!(%symbol, "{w}");
        }
        Ok(run)
    }

    // ---- recommendations ----

    pub fn recommend(&self, request: &IntentRequest, user: Option<&str>) -> Result<Recommendation> {
        let categories = Categories::builtin();
        let intent = parse_intent(request, categories, &IntentDefaults::default(), Some(&KeywordIntent as &dyn IntentProvider))?;
        let now = self.now();
        let candidates = filter_recent(&self.news()?, now, self.config.news.windows.get(intent.horizon));
        let graph = build_graph(&candidates)?;
        let credibility = CredibilityTable::default();
        let ctx = RecommendContext {
            graph: &graph,
            categories,
            credibility: &credibility,
            summary: &ExtractiveSummary,
            recency_lambda: self.config.recommend.recency_lambda,
            now,
        };
        let policy = self.feedback.snapshot(user.unwrap_or(DEFAULT_USER));
        let mut rec = recommend(&candidates, &intent, &policy.weights.theta, self.config.recommend.top_k, &ctx)?;
        rec.policy_version = policy.version;
        self.recommendations.put(&rec)?;
        Ok(rec)
    }

    pub fn feedback(&self, request: &FeedbackRequest) -> Result<FeedbackAck> {
        let rec = self
            .recommendations
            .get(&request.recommendation)?
            .ok_or_else(|| Error::InvalidArgument(format!("unknown recommendation '{}'", request.recommendation)))?;
        let now = self.now();
        let event = FeedbackEvent::for_item(&request.user, &rec, &request.item, request.outcome, now)?;
        let (seq, snap) = self.feedback.record(&event)?;
        Ok(FeedbackAck { seq, user: request.user.clone(), theta: snap.weights.theta, policy_version: snap.version, updated_at: now })
    }

    pub fn policy(&self, user: &str) -> crate::recommend::PolicySnapshot {
        self.feedback.snapshot(user)
    }

    /// Rebuilds every user's weights from the log and compares them with the
    /// live weights.
    pub fn feedback_replay(&self) -> Result<ReplayReport> {
        let events = self.feedback.log().read_all()?;
        let replayed = replay(&events, self.feedback.initial())?;
        let matches_online = replayed.iter().all(|(u, w)| self.feedback.snapshot(u).weights == *w);
        Ok(ReplayReport { events: events.len(), users: replayed.into_iter().map(|(u, w)| (u, w.theta)).collect(), matches_online })
    }

    // ---- chat ----

    /// Routes a message to the report flow (when it names a stored asset) or
    /// the recommendation flow (when it asks for picks or names a category).
    pub fn chat(&self, request: &ChatRequest) -> Result<ChatReply> {
        let lower = request.message.to_lowercase();
        let words: Vec<&str> = lower.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).collect();
        let wants_picks = words.iter().any(|w| RECOMMEND_WORDS.contains(w));
        let known = self.candles.symbols()?;
        let symbol = Gazetteer::builtin()
            .tickers_in(&request.message)
            .into_iter()
            .chain(words.iter().map(|w| w.to_ascii_uppercase()))
            .find(|s| known.contains(s));
        let category = Categories::builtin().find_in_text(&request.message);
        let parsed = KeywordIntent.parse(&request.message, Categories::builtin())?;
        let horizon: Horizon = parsed.horizon.as_deref().map(str::parse).transpose()?.unwrap_or_default();

        let now = self.now();
        let picks = wants_picks && category.is_some() || symbol.is_none();
        if let (false, Some(symbol)) = (picks, symbol) {
            let run = self.report(&symbol, horizon)?;
            let e = &run.enhanced;
            let mut provenance: Vec<String> = e.provenance.sections.iter().map(|(h, src)| format!("{h}: {}", src.join(", "))).collect();
            provenance.extend(e.enhancement_sources.iter().map(|s| format!("signal:{}", s.id())));
            return Ok(ChatReply {
                session_id: request.session_id.clone(),
                route: ChatRoute::Report,
                reply: e.to_markdown(),
                provenance,
                generated_at: now,
                payload: serde_json::to_value(e)?,
            });
        }
        if !(wants_picks || category.is_some()) {
            return Err(Error::InvalidArgument("message names neither a tracked asset nor a news category".into()));
        }
        let req = IntentRequest { text: Some(request.message.clone()), ..IntentRequest::default() };
        let rec = self.recommend(&req, request.user.as_deref())?;
        let provenance = rec.ranked_items.iter().map(|r| format!("{}: {}", r.news_id, r.evidence_path.join(" -> "))).collect();
        Ok(ChatReply {
            session_id: request.session_id.clone(),
            route: ChatRoute::Recommendation,
            reply: rec.summary.clone(),
            provenance,
            generated_at: now,
            payload: serde_json::to_value(&rec)?,
        })
    }
}

/// Candle selection for [`Engine::klines`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlineRange {
    All,
    Window { end: Timestamp, span: i64 },
    Between { from: Timestamp, to: Timestamp },
}
