use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use super::engine::Recommendation;
use super::policy::{update_policy, PolicyWeights, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::market_data::Timestamp;

pub const FEEDBACK_SCHEMA_VERSION: u32 = 1;

/// One user reaction to a recommended item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub user: String,
    pub recommendation: String,
    #[serde(default)]
    pub item: Option<String>,
    /// 1 for a click or top rating, 0 for an ignore; ratings normalized.
    pub outcome: f64,
    pub features: Vec<f64>,
    #[serde(default)]
    pub time: Timestamp,
}

impl FeedbackEvent {
    /// Event for `item` of `rec`, taking the features it was ranked with.
    pub fn for_item(user: &str, rec: &Recommendation, item: &str, outcome: f64, time: Timestamp) -> Result<Self> {
        let ranked = rec.item(item).ok_or_else(|| Error::InvalidArgument(format!("item '{item}' is not part of recommendation {}", rec.id)))?;
        Ok(FeedbackEvent {
            user: user.to_string(),
            recommendation: rec.id.clone(),
            item: Some(item.to_string()),
            outcome,
            features: ranked.features.clone(),
            time,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.outcome) {
            return Err(Error::InvalidArgument(format!("outcome {} outside [0, 1]", self.outcome)));
        }
        if self.features.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch { expected: FEATURE_DIM, got: self.features.len() });
        }
        if let Some(x) = self.features.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidArgument(format!("feature {x} outside [0, 1]")));
        }
        if self.user.is_empty() {
            return Err(Error::InvalidArgument("empty user id".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LogLine {
    schema_version: u32,
    seq: u64,
    #[serde(flatten)]
    event: FeedbackEvent,
}

/// Append-only JSONL feedback log.
#[derive(Debug)]
pub struct FeedbackLog {
    path: PathBuf,
    writer: Mutex<(File, u64)>,
}

fn unavailable(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::StorageUnavailable(format!("{}: {e}", path.display()))
}

impl FeedbackLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| unavailable(&path, e))?;
        }
        let next = if path.exists() { Self::read_path(&path)?.len() as u64 } else { 0 };
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| unavailable(&path, e))?;
        Ok(FeedbackLog { path, writer: Mutex::new((file, next)) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Validates and appends; returns the event's sequence number.
    pub fn append(&self, event: &FeedbackEvent) -> Result<u64> {
        event.validate()?;
        let mut w = self.writer.lock();
        let seq = w.1;
        let mut line = serde_json::to_string(&LogLine { schema_version: FEEDBACK_SCHEMA_VERSION, seq, event: event.clone() })?;
        line.push('\n');
        w.0.write_all(line.as_bytes()).and_then(|_| w.0.flush()).map_err(|e| unavailable(&self.path, e))?;
        w.1 += 1;
        Ok(seq)
    }

    pub fn read_all(&self) -> Result<Vec<FeedbackEvent>> {
        let _w = self.writer.lock();
        Self::read_path(&self.path)
    }

    fn read_path(path: &Path) -> Result<Vec<FeedbackEvent>> {
        let file = File::open(path).map_err(|e| unavailable(path, e))?;
        let mut out = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| unavailable(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine = serde_json::from_str(&line).map_err(|e| Error::MalformedRow { line: n + 1, reason: e.to_string() })?;
            if parsed.schema_version != FEEDBACK_SCHEMA_VERSION {
                return Err(Error::MalformedRow { line: n + 1, reason: format!("unsupported schema_version {}", parsed.schema_version) });
            }
            out.push(parsed.event);
        }
        Ok(out)
    }
}

/// Folds events in order into per-user weights starting from `initial`.
pub fn replay(events: &[FeedbackEvent], initial: &PolicyWeights) -> Result<BTreeMap<String, PolicyWeights>> {
    let mut users: BTreeMap<String, PolicyWeights> = BTreeMap::new();
    for e in events {
        let w = users.entry(e.user.clone()).or_insert_with(|| initial.clone());
        *w = update_policy(w, &e.features, e.outcome)?;
    }
    Ok(users)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub weights: PolicyWeights,
    /// Events applied for this user.
    pub version: u64,
}

/// Feedback log plus the live per-user weights. Appends and updates happen
/// under one lock so the live weights always equal a replay of the log.
#[derive(Debug)]
pub struct FeedbackLoop {
    log: FeedbackLog,
    initial: PolicyWeights,
    policies: RwLock<BTreeMap<String, PolicySnapshot>>,
    write: Mutex<()>,
}

impl FeedbackLoop {
    /// Opens the log and rebuilds the weights by replaying it.
    pub fn open(path: impl AsRef<Path>, initial: PolicyWeights) -> Result<Self> {
        let log = FeedbackLog::open(path)?;
        let events = log.read_all()?;
        let mut policies: BTreeMap<String, PolicySnapshot> = BTreeMap::new();
        for e in &events {
            let snap = policies.entry(e.user.clone()).or_insert_with(|| PolicySnapshot { weights: initial.clone(), version: 0 });
            snap.weights = update_policy(&snap.weights, &e.features, e.outcome)?;
            snap.version += 1;
        }
        Ok(FeedbackLoop { log, initial, policies: RwLock::new(policies), write: Mutex::new(()) })
    }

    pub fn log(&self) -> &FeedbackLog {
        &self.log
    }

    pub fn initial(&self) -> &PolicyWeights {
        &self.initial
    }

    /// Current weights for `user` (initial weights for unknown users).
    pub fn snapshot(&self, user: &str) -> PolicySnapshot {
        self.policies.read().get(user).cloned().unwrap_or_else(|| PolicySnapshot { weights: self.initial.clone(), version: 0 })
    }

    /// Logs the event, then applies one update to the user's weights.
    pub fn record(&self, event: &FeedbackEvent) -> Result<(u64, PolicySnapshot)> {
        let _guard = self.write.lock();
        let current = self.snapshot(&event.user);
        let next = update_policy(&current.weights, &event.features, event.outcome)?;
        let seq = self.log.append(event)?;
        let snap = PolicySnapshot { weights: next, version: current.version + 1 };
        self.policies.write().insert(event.user.clone(), snap.clone());
        Ok((seq, snap))
    }
}

/// Issued recommendations, kept so feedback can recover the features an
/// item was ranked with.
#[derive(Debug)]
pub struct RecommendationStore {
    path: PathBuf,
    lock: Mutex<()>,
}

impl RecommendationStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| unavailable(&path, e))?;
        }
        Ok(RecommendationStore { path, lock: Mutex::new(()) })
    }

    pub fn put(&self, rec: &Recommendation) -> Result<()> {
        let _g = self.lock.lock();
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path).map_err(|e| unavailable(&self.path, e))?;
        let mut line = serde_json::to_string(rec)?;
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(|e| unavailable(&self.path, e))
    }

    /// Latest stored recommendation with `id`.
    pub fn get(&self, id: &str) -> Result<Option<Recommendation>> {
        let _g = self.lock.lock();
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(unavailable(&self.path, e)),
        };
        let mut found = None;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| unavailable(&self.path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Recommendation = serde_json::from_str(&line).map_err(|e| Error::MalformedRow { line: n + 1, reason: e.to_string() })?;
            if rec.id == id {
                found = Some(rec);
            }
        }
        Ok(found)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(user: &str, y: f64, phi: [f64; 5]) -> FeedbackEvent {
        FeedbackEvent { user: user.into(), recommendation: "r".into(), item: Some("n".into()), outcome: y, features: phi.to_vec(), time: 0 }
    }

    #[test]
    fn append_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let log = FeedbackLog::open(dir.path().join("feedback.jsonl")).unwrap();
        assert_eq!(log.append(&event("u", 1.0, [0.1; 5])).unwrap(), 0);
        assert_eq!(log.append(&event("u", 0.0, [0.2; 5])).unwrap(), 1);
        assert_eq!(log.read_all().unwrap(), vec![event("u", 1.0, [0.1; 5]), event("u", 0.0, [0.2; 5])]);
        let text = std::fs::read_to_string(log.path()).unwrap();
        assert!(text.lines().all(|l| l.contains("\"schema_version\":1")));
        drop(log);
        let reopened = FeedbackLog::open(dir.path().join("feedback.jsonl")).unwrap();
        assert_eq!(reopened.append(&event("u", 1.0, [0.3; 5])).unwrap(), 2);
    }

    #[test]
    fn invalid_events_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let log = FeedbackLog::open(dir.path().join("f.jsonl")).unwrap();
        assert!(log.append(&event("u", 1.5, [0.1; 5])).is_err());
        assert!(log.append(&event("u", 1.0, [1.1, 0.0, 0.0, 0.0, 0.0])).is_err());
        let mut short = event("u", 1.0, [0.1; 5]);
        short.features.pop();
        assert!(matches!(log.append(&short), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn replay_matches_online_per_user() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.jsonl");
        let fl = FeedbackLoop::open(&path, PolicyWeights::default()).unwrap();
        for i in 0..30 {
            let user = if i % 3 == 0 { "alice" } else { "bob" };
            let phi = [(i % 7) as f64 / 7.0, 0.5, 0.25, (i % 2) as f64, 0.75];
            fl.record(&event(user, (i % 2) as f64, phi)).unwrap();
        }
        let replayed = replay(&fl.log().read_all().unwrap(), &PolicyWeights::default()).unwrap();
        assert_eq!(replayed["alice"], fl.snapshot("alice").weights);
        assert_eq!(replayed["bob"], fl.snapshot("bob").weights);
        assert_eq!(fl.snapshot("bob").version, 20);
        let reopened = FeedbackLoop::open(&path, PolicyWeights::default()).unwrap();
        assert_eq!(reopened.snapshot("alice"), fl.snapshot("alice"));
    }

    #[test]
    fn unwritable_location() {
        assert!(matches!(FeedbackLog::open("/proc/no/such/dir/f.jsonl"), Err(Error::StorageUnavailable(_))));
    }
}
