use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horizon::Horizon;
use crate::news::canonicalize;
use crate::text::tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum Risk {
    Low,
    #[default]
    Medium,
    High,
}

impl fmt::Display for Risk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Risk {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" | "conservative" => Ok(Risk::Low),
            "medium" | "moderate" | "mid" => Ok(Risk::Medium),
            "high" | "aggressive" => Ok(Risk::High),
            other => Err(Error::InvalidArgument(format!("unknown risk level '{other}'"))),
        }
    }
}

/// What a user is looking for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Intent {
    pub category: String,
    pub risk: Risk,
    pub horizon: Horizon,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Category {
    pub aliases: Vec<String>,
    pub keywords: Vec<String>,
    /// Canonical entity ids (lowercase tickers) that belong to the category.
    pub entities: Vec<String>,
}

/// Asset-class tags with their aliases, query keywords and member entities.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Categories {
    pub version: u32,
    pub categories: BTreeMap<String, Category>,
}

static BUILTIN: LazyLock<Categories> =
    LazyLock::new(|| serde_json::from_str(include_str!("../../data/categories.json")).expect("bundled categories are valid JSON"));

fn alias_key(s: &str) -> String {
    tokens(s).concat()
}

impl Categories {
    pub fn builtin() -> &'static Categories {
        &BUILTIN
    }

    /// Canonical tag for a tag or alias; matching ignores case, spaces and
    /// punctuation (`layer-2` → `Layer2`).
    pub fn canonical(&self, raw: &str) -> Result<&str> {
        let key = alias_key(raw);
        self.categories
            .iter()
            .find(|(name, c)| alias_key(name) == key || c.aliases.iter().any(|a| alias_key(a) == key))
            .map(|(name, _)| name.as_str())
            .ok_or_else(|| Error::UnknownCategory(raw.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<&Category> {
        self.categories.get(name).ok_or_else(|| Error::UnknownCategory(name.to_string()))
    }

    /// First category whose tag or alias occurs in free text.
    pub fn find_in_text(&self, text: &str) -> Option<&str> {
        let padded = format!(" {} ", canonicalize(&tokens(text).join(" ")));
        self.categories
            .iter()
            .find(|(name, c)| {
                std::iter::once(name.as_str())
                    .chain(c.aliases.iter().map(String::as_str))
                    .any(|a| padded.contains(&format!(" {} ", tokens(a).join(" "))))
            })
            .map(|(name, _)| name.as_str())
    }
}

/// Intent query as received from a client. Free text is used for fields the
/// structured part leaves out.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentRequest {
    #[serde(default)]
    pub category: Option<String>,
    #[serde(default)]
    pub risk: Option<String>,
    #[serde(default)]
    pub horizon: Option<String>,
    #[serde(default)]
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentDefaults {
    pub category: Option<String>,
    pub risk: Risk,
    pub horizon: Horizon,
}

impl Default for IntentDefaults {
    fn default() -> Self {
        IntentDefaults { category: None, risk: Risk::Medium, horizon: Horizon::Medium }
    }
}

/// Reads intent fields out of free text.
pub trait IntentProvider: Send + Sync {
    fn parse(&self, text: &str, categories: &Categories) -> Result<IntentRequest>;
}

/// Keyword matcher for free-text intents.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeywordIntent;

impl IntentProvider for KeywordIntent {
    fn parse(&self, text: &str, categories: &Categories) -> Result<IntentRequest> {
        let words = tokens(text);
        let has = |ws: &[&str]| words.iter().any(|w| ws.contains(&w.as_str()));
        let risk = if has(&["safe", "conservative", "low"]) {
            Some("Low")
        } else if has(&["aggressive", "risky", "high", "degen"]) {
            Some("High")
        } else if has(&["moderate", "medium", "balanced"]) {
            Some("Medium")
        } else {
            None
        };
        let horizon = if has(&["today", "short", "week", "weeks", "day", "days"]) {
            Some("Short")
        } else if has(&["long", "year", "years"]) {
            Some("Long")
        } else if has(&["month", "months", "medium", "quarter"]) {
            Some("Medium")
        } else {
            None
        };
        Ok(IntentRequest {
            category: categories.find_in_text(text).map(str::to_string),
            risk: risk.map(str::to_string),
            horizon: horizon.map(str::to_string),
            text: None,
        })
    }
}

/// Fills every intent field from the request, then free text (through
/// `provider`), then `defaults`.
pub fn parse_intent(
    request: &IntentRequest,
    categories: &Categories,
    defaults: &IntentDefaults,
    provider: Option<&dyn IntentProvider>,
) -> Result<Intent> {
    let from_text = match (&request.text, provider) {
        (Some(text), Some(p)) => p.parse(text, categories)?,
        _ => IntentRequest::default(),
    };
    let category = request
        .category
        .clone()
        .or(from_text.category)
        .or_else(|| defaults.category.clone())
        .ok_or_else(|| Error::UnknownCategory(String::new()))?;
    let category = categories.canonical(&category)?.to_string();
    let risk = match request.risk.clone().or(from_text.risk) {
        Some(r) => r.parse()?,
        None => defaults.risk,
    };
    let horizon = match request.horizon.clone().or(from_text.horizon) {
        Some(h) => h.parse()?,
        None => defaults.horizon,
    };
    Ok(Intent { category, risk, horizon })
}

/// One query per category keyword, carrying the horizon's search window.
pub fn plan_queries(intent: &Intent, categories: &Categories) -> Result<Vec<String>> {
    let category = categories.get(&intent.category)?;
    let mut keywords: Vec<&str> = category.keywords.iter().map(String::as_str).collect();
    if keywords.is_empty() {
        keywords.push(&intent.category);
    }
    let risk = intent.risk.to_string().to_lowercase();
    Ok(keywords
        .into_iter()
        .map(|k| format!("{k} crypto news, {}, {risk} risk", intent.horizon.window_phrase()))
        .collect())
}
