use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::types::{AgentId, PartialReport};
use crate::clock::Clock;
use crate::error::Result;
use crate::horizon::Horizon;
use crate::market_data::Timestamp;

/// Time-to-live per agent, in seconds. The recommendation agent's TTL shrinks
/// with load: `clamp(a3_base / queries_last_hour, a3_floor, a3_cap)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TtlPolicy {
    pub a1: i64,
    pub a2: i64,
    pub a3_base: i64,
    pub a3_floor: i64,
    pub a3_cap: i64,
}

impl Default for TtlPolicy {
    fn default() -> Self {
        TtlPolicy { a1: 30 * 60, a2: 6 * 3600, a3_base: 3600, a3_floor: 5 * 60, a3_cap: 3600 }
    }
}

impl TtlPolicy {
    pub fn a3(&self, queries_per_hour: usize) -> i64 {
        (self.a3_base / queries_per_hour.max(1) as i64).clamp(self.a3_floor, self.a3_cap)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub agent: AgentId,
    pub symbol: String,
    pub horizon: Horizon,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub value: PartialReport,
    pub cached_at: Timestamp,
    pub ttl: i64,
}

/// Hex SHA-256 of a JSON-serializable input, used as the cache digest.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    hex::encode(Sha256::digest(&bytes))
}

type Slot = Arc<Mutex<Option<CacheEntry>>>;

/// TTL cache for agent outputs. Lookups for one key are serialized, so
/// concurrent misses on that key run the computation once.
pub struct ReportCache {
    clock: Arc<dyn Clock>,
    policy: TtlPolicy,
    slots: DashMap<CacheKey, Slot>,
    a3_calls: Mutex<VecDeque<Timestamp>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl ReportCache {
    pub fn new(clock: Arc<dyn Clock>, policy: TtlPolicy) -> Self {
        ReportCache { clock, policy, slots: DashMap::new(), a3_calls: Mutex::new(VecDeque::new()), hits: AtomicU64::new(0), misses: AtomicU64::new(0) }
    }

    pub fn policy(&self) -> &TtlPolicy {
        &self.policy
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    fn ttl(&self, agent: AgentId, now: Timestamp) -> Option<i64> {
        match agent {
            AgentId::A1 => Some(self.policy.a1),
            AgentId::A2 => Some(self.policy.a2),
            AgentId::A3 => {
                let mut calls = self.a3_calls.lock();
                calls.push_back(now);
                while calls.front().is_some_and(|&t| t <= now - 3600) {
                    calls.pop_front();
                }
                Some(self.policy.a3(calls.len()))
            }
            AgentId::A4 => None,
        }
    }

    /// Serves the cached output while `now - cached_at < ttl`, otherwise runs
    /// `compute` and stores the result. The semantic agent is never cached.
    pub fn cached_run(
        &self,
        agent: AgentId,
        symbol: &str,
        horizon: Horizon,
        digest: &str,
        compute: impl FnOnce() -> Result<PartialReport>,
    ) -> Result<PartialReport> {
        let now = self.clock.now();
        let Some(ttl) = self.ttl(agent, now) else {
            self.misses.fetch_add(1, Ordering::Relaxed);
            return compute();
        };
        let key = CacheKey { agent, symbol: symbol.to_string(), horizon, digest: digest.to_string() };
        let slot = self.slots.entry(key.clone()).or_default().clone();
        let mut entry = slot.lock();
        let now = self.clock.now();
        if let Some(e) = entry.as_ref() {
            if now - e.cached_at < ttl {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(e.value.clone());
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let value = compute()?;
        *entry = Some(CacheEntry { key, value: value.clone(), cached_at: now, ttl });
        Ok(value)
    }
}
