//! Dual-track forecasting: input assembly, providers, adaptive fusion,
//! scoring and text summaries.

mod fusion;
mod metrics;
mod provider;
mod run;
mod summary;
mod types;

pub use fusion::{fuse, update_fusion, update_fusion_with, FusionConfig, FusionRegistry, FusionState};
pub use metrics::{accuracy, mean_accuracy, win_rate};
pub use provider::{ForecastProvider, ForecastRequest, Gate, GatedProvider, HttpForecastProvider, MlTrackProvider, PersistenceProvider};
pub use run::{run_forecast, Degradation, ForecastMetrics, ForecastOptions, ForecastOutcome, Tracks};
pub use summary::{render_summary, SummaryInput, SummaryTemplate, TemplateSet};
pub use types::{build_input, ForecastInput, ForecastSeries, HorizonTable, SeriesSet, DAY, HOUR, REALTIME_NEWS_SPAN};
