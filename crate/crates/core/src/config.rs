//! Service and CLI configuration: one TOML file, `MLION_` environment
//! overrides, then command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{FusionConfig, HorizonTable};
use crate::horizon::NewsWindows;
use crate::report::{SignalWeights, TtlPolicy};

pub const ENV_PREFIX: &str = "MLION_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProviderConfig {
    /// Remote endpoint; the offline stub is used when absent.
    pub url: Option<String>,
    pub timeout_ms: u64,
    pub retries: u32,
    pub concurrency: Option<usize>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig { url: None, timeout_ms: 10_000, retries: 2, concurrency: None }
    }
}

impl ProviderConfig {
    fn validate(&self, name: &str) -> Result<()> {
        if let Some(url) = &self.url {
            if !(url.starts_with("http://") || url.starts_with("https://")) {
                return Err(Error::ConfigInvalid(format!("{name}.url must be an http(s) URL, got '{url}'")));
            }
        }
        if self.timeout_ms == 0 || self.timeout_ms > 600_000 {
            return Err(Error::ConfigInvalid(format!("{name}.timeout_ms must be in 1..=600000")));
        }
        if self.retries > 10 {
            return Err(Error::ConfigInvalid(format!("{name}.retries must be at most 10")));
        }
        if self.concurrency == Some(0) {
            return Err(Error::ConfigInvalid(format!("{name}.concurrency must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastSection {
    pub gamma: f64,
    pub horizons: HorizonTable,
    pub template: String,
    /// Price noise of the offline LLM stub; 0 is plain persistence.
    pub stub_noise: f64,
    /// Ridge penalty of the ML track.
    pub ridge_alpha: f64,
    /// Most recent candles the ML track trains on; 0 means all.
    pub train_window: usize,
    pub llm: ProviderConfig,
}

impl Default for ForecastSection {
    fn default() -> Self {
        ForecastSection {
            gamma: 0.5,
            horizons: HorizonTable::default(),
            template: "default".into(),
            stub_noise: 0.0,
            ridge_alpha: 0.01,
            train_window: 0,
            llm: ProviderConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    pub weights: SignalWeights,
    pub threshold: f64,
    pub top_k: usize,
    pub recency_lambda: f64,
}

impl Default for SignalSection {
    fn default() -> Self {
        let p = crate::report::SignalPolicy::default();
        SignalSection { weights: p.weights, threshold: p.threshold, top_k: p.top_k, recency_lambda: p.recency_lambda }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewsSection {
    /// Sentiment threshold.
    pub tau: f64,
    pub windows: NewsWindows,
}

impl Default for NewsSection {
    fn default() -> Self {
        NewsSection { tau: 0.6, windows: NewsWindows::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecommendSection {
    pub eta: f64,
    pub top_k: usize,
    pub recency_lambda: f64,
}

impl Default for RecommendSection {
    fn default() -> Self {
        RecommendSection { eta: 0.05, top_k: 10, recency_lambda: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrieverSection {
    /// JSON file of retrievable items, used when no URL is set.
    pub fixture: Option<PathBuf>,
    #[serde(flatten)]
    pub provider: ProviderConfig,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApiConfig {
    pub bind: String,
    /// Root of every store (candles, predictions, news, feedback, state).
    pub data_dir: PathBuf,
    pub forecast: ForecastSection,
    pub fusion: FusionConfig,
    pub signals: SignalSection,
    pub cache: TtlPolicy,
    pub news: NewsSection,
    pub recommend: RecommendSection,
    pub retriever: RetrieverSection,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            bind: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("mlion-data"),
            forecast: ForecastSection::default(),
            fusion: FusionConfig::default(),
            signals: SignalSection::default(),
            cache: TtlPolicy::default(),
            news: NewsSection::default(),
            recommend: RecommendSection::default(),
            retriever: RetrieverSection::default(),
        }
    }
}

fn unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::ConfigInvalid(format!("{name} = {x} outside [0, 1]")))
    }
}

impl ApiConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ApiConfig = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` (defaults when `None`), applies `MLION_*` variables from
    /// `env`, and validates.
    pub fn load(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut value: toml::Table = toml::from_str(&text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        for (key, raw) in env {
            if let Some(rest) = key.strip_prefix(ENV_PREFIX) {
                if rest == "CONFIG" || rest == "LOG" {
                    continue;
                }
                apply_override(&mut value, rest, &raw)?;
            }
        }
        let mut config: ApiConfig = toml::Value::Table(value).try_into().map_err(|e: toml::de::Error| Error::ConfigInvalid(e.to_string()))?;
        // Fixture paths in a file are relative to that file.
        if let (Some(base), Some(fixture)) = (path.and_then(Path::parent), config.retriever.fixture.as_mut()) {
            if fixture.is_relative() {
                *fixture = base.join(&*fixture);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bind.parse::<std::net::SocketAddr>().is_err() {
            return Err(Error::ConfigInvalid(format!("bind '{}' is not a socket address", self.bind)));
        }
        let f = &self.forecast;
        unit("forecast.gamma", f.gamma)?;
        if !(0.0..1.0).contains(&f.stub_noise) {
            return Err(Error::ConfigInvalid("forecast.stub_noise must be in [0, 1)".into()));
        }
        if !(f.ridge_alpha >= 0.0 && f.ridge_alpha.is_finite()) {
            return Err(Error::ConfigInvalid("forecast.ridge_alpha must be finite and non-negative".into()));
        }
        let h = f.horizons;
        if [h.one_day, h.one_hour, h.five_min].iter().any(|s| *s == 0 || *s > 1000) {
            return Err(Error::ConfigInvalid("forecast.horizons entries must be in 1..=1000".into()));
        }
        crate::forecast::TemplateSet::builtin().get(&f.template).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        f.llm.validate("forecast.llm")?;
        self.fusion.validate().map_err(|e| Error::ConfigInvalid(format!("fusion: {e}")))?;

        let s = &self.signals;
        s.weights.validate().map_err(|e| Error::ConfigInvalid(format!("signals.weights: {e}")))?;
        unit("signals.threshold", s.threshold)?;
        if s.top_k == 0 {
            return Err(Error::ConfigInvalid("signals.top_k must be positive".into()));
        }
        if !(s.recency_lambda >= 0.0 && s.recency_lambda.is_finite()) {
            return Err(Error::ConfigInvalid("signals.recency_lambda must be finite and non-negative".into()));
        }

        let c = &self.cache;
        if c.a1 <= 0 || c.a2 <= 0 || c.a3_base <= 0 || c.a3_floor <= 0 || c.a3_floor > c.a3_cap {
            return Err(Error::ConfigInvalid("cache TTLs must be positive with a3_floor <= a3_cap".into()));
        }

        if !(0.5..=1.0).contains(&self.news.tau) {
            return Err(Error::ConfigInvalid(format!("news.tau = {} outside [0.5, 1]", self.news.tau)));
        }
        self.news.windows.validate()?;

        let r = &self.recommend;
        if !(r.eta > 0.0 && r.eta <= 10.0) {
            return Err(Error::ConfigInvalid(format!("recommend.eta = {} outside (0, 10]", r.eta)));
        }
        if r.top_k == 0 {
            return Err(Error::ConfigInvalid("recommend.top_k must be positive".into()));
        }
        if !(r.recency_lambda >= 0.0 && r.recency_lambda.is_finite()) {
            return Err(Error::ConfigInvalid("recommend.recency_lambda must be finite and non-negative".into()));
        }
        self.retriever.provider.validate("retriever")?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }
}

/// `FORECAST__LLM__URL=...` sets `forecast.llm.url`. Values are read as TOML
/// literals when they parse, otherwise as strings.
fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let path: Vec<String> = key.split("__").map(str::to_ascii_lowercase).collect();
    if path.iter().any(String::is_empty) {
        return Err(Error::ConfigInvalid(format!("malformed override {ENV_PREFIX}{key}")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = path.split_last().expect("non-empty");
    let mut cursor = table;
    for p in parents {
        let entry = cursor.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry.as_table_mut().ok_or_else(|| Error::ConfigInvalid(format!("{ENV_PREFIX}{key}: '{p}' is not a table")))?;
    }
    cursor.insert(last.clone(), value);
    Ok(())
}
