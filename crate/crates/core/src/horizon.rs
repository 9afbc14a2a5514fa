//! Investment horizon shared by reports and recommendations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum Horizon {
    Short,
    #[default]
    Medium,
    Long,
}

impl Horizon {
    pub const ALL: [Horizon; 3] = [Horizon::Short, Horizon::Medium, Horizon::Long];

    /// Default news recency window in seconds.
    pub const fn news_window(self) -> i64 {
        match self {
            Horizon::Short => 86_400,
            Horizon::Medium => 7 * 86_400,
            Horizon::Long => 90 * 86_400,
        }
    }

    /// Search-window phrase used in retrieval queries.
    pub const fn window_phrase(self) -> &'static str {
        match self {
            Horizon::Short => "last 24h",
            Horizon::Medium => "past 7-30 days",
            Horizon::Long => "past 1-3 months",
        }
    }

    pub const fn label(self) -> &'static str {
        match self {
            Horizon::Short => "Short",
            Horizon::Medium => "Medium",
            Horizon::Long => "Long",
        }
    }
}

/// Configurable news recency window per horizon, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewsWindows {
    pub short: i64,
    pub medium: i64,
    pub long: i64,
}

impl Default for NewsWindows {
    fn default() -> Self {
        NewsWindows { short: Horizon::Short.news_window(), medium: Horizon::Medium.news_window(), long: Horizon::Long.news_window() }
    }
}

impl NewsWindows {
    pub fn get(&self, horizon: Horizon) -> i64 {
        match horizon {
            Horizon::Short => self.short,
            Horizon::Medium => self.medium,
            Horizon::Long => self.long,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.short, self.medium, self.long].iter().any(|w| *w <= 0) {
            return Err(Error::ConfigInvalid("news windows must be positive".into()));
        }
        Ok(())
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "short" | "s" => Ok(Horizon::Short),
            "medium" | "m" | "mid" => Ok(Horizon::Medium),
            "long" | "l" => Ok(Horizon::Long),
            other => Err(Error::InvalidArgument(format!("unknown horizon '{other}'"))),
        }
    }
}
