use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::agents::{run_market_agent, run_recommendation_agent, run_semantic_agent, run_technical_agent, FeedItem, RecommendationContext, SemanticProvider};
use super::cache::{digest, ReportCache, TtlPolicy};
use super::compose::{augment, build_prompt, integrate, Prompt, TimeWindow};
use super::retriever::Retriever;
use super::signal::{validate_signals, CredibilityTable, Signal, SignalPolicy};
use super::types::{AgentId, EnhancedReport, PartialReport, RawReport};
use crate::clock::Clock;
use crate::error::Result;
use crate::forecast::ForecastSeries;
use crate::horizon::{Horizon, NewsWindows};
use crate::indicators::IndicatorParams;
use crate::market_data::CandleSeries;
use crate::news::{filter_recent, NewsItem};

/// Everything one report run reads.
#[derive(Debug, Clone, Copy)]
pub struct ReportInputs<'a> {
    pub symbol: &'a str,
    pub horizon: Horizon,
    pub series: &'a CandleSeries,
    /// Annotated news; filtered to the horizon window inside the run.
    pub news: &'a [NewsItem],
    pub flows: &'a [FeedItem],
    pub social: &'a [FeedItem],
    pub forecast: Option<&'a ForecastSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRun {
    pub partials: Vec<PartialReport>,
    pub raw: RawReport,
    pub prompt: Prompt,
    pub candidates: Vec<Signal>,
    pub enhanced: EnhancedReport,
    pub warnings: Vec<String>,
}

pub struct ReportPipeline {
    pub indicator_params: IndicatorParams,
    pub signals: SignalPolicy,
    pub credibility: CredibilityTable,
    pub gamma: f64,
    pub windows: NewsWindows,
    pub semantic: Box<dyn SemanticProvider>,
    pub retriever: Box<dyn Retriever>,
    pub clock: Arc<dyn Clock>,
    pub cache: ReportCache,
}

impl ReportPipeline {
    pub fn new(clock: Arc<dyn Clock>, semantic: Box<dyn SemanticProvider>, retriever: Box<dyn Retriever>) -> Self {
        ReportPipeline {
            indicator_params: IndicatorParams::default(),
            signals: SignalPolicy::default(),
            credibility: CredibilityTable::default(),
            gamma: 0.5,
            windows: NewsWindows::default(),
            semantic,
            retriever,
            cache: ReportCache::new(clock.clone(), TtlPolicy::default()),
            clock,
        }
    }

    pub fn with_ttl(mut self, policy: TtlPolicy) -> Self {
        self.cache = ReportCache::new(self.clock.clone(), policy);
        self
    }

    /// A1 and A2 in parallel, then A3, A4, integration, prompt, retrieval and
    /// enhancement. A failing retriever leaves the report unenhanced and adds
    /// a warning.
    pub fn run(&self, inputs: &ReportInputs<'_>) -> Result<ReportRun> {
        let now = self.clock.now();
        let span = self.windows.get(inputs.horizon);
        let window = TimeWindow::spanning(now, span);
        let news = filter_recent(inputs.news, now, span);
        let (symbol, horizon) = (inputs.symbol, inputs.horizon);

        let a1_key = digest(&(&inputs.series, &self.indicator_params));
        let a2_key = digest(&(&news, inputs.flows, inputs.social));
        let (r1, r2) = std::thread::scope(|s| {
            let r1 = s.spawn(|| {
                self.cache.cached_run(AgentId::A1, symbol, horizon, &a1_key, || run_technical_agent(inputs.series, &self.indicator_params, now))
            });
            let r2 = self.cache.cached_run(AgentId::A2, symbol, horizon, &a2_key, || Ok(run_market_agent(&news, inputs.flows, inputs.social, now)));
            (r1.join().expect("technical agent panicked"), r2)
        });
        let (r1, r2) = (r1?, r2?);
        let context = RecommendationContext { symbol, forecast: inputs.forecast };
        let a3_key = digest(&(&r1, &r2, inputs.forecast));
        let r3 = self.cache.cached_run(AgentId::A3, symbol, horizon, &a3_key, || run_recommendation_agent(Some(&r1), Some(&r2), &context, now))?;
        let r4 = self.cache.cached_run(AgentId::A4, symbol, horizon, "", || Ok(run_semantic_agent(&r1, &r2, &r3, self.semantic.as_ref(), now)))?;
        let partials = vec![r1, r2, r3, r4];

        let raw = integrate(&partials, symbol, horizon, now)?;
        let prompt = build_prompt(&raw, self.gamma, window);
        let mut warnings = Vec::new();
        let items = self.retriever.retrieve(&prompt).unwrap_or_else(|e| {
            warnings.push(format!("retrieval skipped: {e}"));
            Vec::new()
        });
        let query = prompt.query();
        let candidates: Vec<Signal> = items.iter().map(|i| self.signals.to_signal(i, &query, now, &self.credibility)).collect();
        let validated = validate_signals(&candidates, &self.signals.weights, self.signals.top_k, self.signals.threshold);
        let enhanced = augment(&raw, &validated);
        Ok(ReportRun { partials, raw, prompt, candidates, enhanced, warnings })
    }
}
