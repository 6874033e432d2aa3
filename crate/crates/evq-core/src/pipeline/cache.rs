//! The <query, top-1 expansion> cache with stale-while-revalidate
//! semantics: entries younger than the soft TTL are fresh, entries
//! between soft and hard TTL are served but marked stale (a refresh
//! should be scheduled), entries past the hard TTL are misses.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::config::CacheConfig;

/// One cached expansion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub query: String,
    pub expansion: String,
    pub computed_ts: i64,
    pub soft_ttl: i64,
    pub hard_ttl: i64,
}

/// Entry state relative to the injected clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Freshness {
    Fresh,
    /// Within the hard TTL but past the soft TTL.
    Stale,
}

struct Slot {
    entry: CacheEntry,
    last_access: AtomicU64,
}

/// Concurrent cache: many readers, atomic per-key replacement, hard-TTL
/// expiry plus a least-recently-used capacity cap.
pub struct ExpansionCache {
    map: RwLock<HashMap<String, Slot>>,
    config: CacheConfig,
    tick: AtomicU64,
}

impl ExpansionCache {
    pub fn new(config: CacheConfig) -> Self {
        assert!(
            config.soft_ttl_secs <= config.hard_ttl_secs,
            "soft TTL must not exceed hard TTL"
        );
        ExpansionCache { map: RwLock::new(HashMap::new()), config, tick: AtomicU64::new(0) }
    }

    pub fn len(&self) -> usize {
        self.map.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Looks up `query` at time `now`. Entries past their hard TTL are
    /// treated as absent.
    pub fn get(&self, query: &str, now: i64) -> Option<(CacheEntry, Freshness)> {
        let map = self.map.read();
        let slot = map.get(query)?;
        let age = now - slot.entry.computed_ts;
        if age > slot.entry.hard_ttl {
            return None;
        }
        slot.last_access
            .store(self.tick.fetch_add(1, Ordering::Relaxed) + 1, Ordering::Relaxed);
        let freshness = if age > slot.entry.soft_ttl {
            Freshness::Stale
        } else {
            Freshness::Fresh
        };
        Some((slot.entry.clone(), freshness))
    }

    /// Inserts or replaces atomically. When inserting over capacity,
    /// hard-expired entries are dropped first, then the least recently
    /// used one.
    pub fn put(&self, query: &str, expansion: String, now: i64) {
        let mut map = self.map.write();
        if !map.contains_key(query) && map.len() >= self.config.capacity {
            map.retain(|_, s| now - s.entry.computed_ts <= s.entry.hard_ttl);
            while map.len() >= self.config.capacity {
                let victim = map
                    .iter()
                    .min_by_key(|(_, s)| s.last_access.load(Ordering::Relaxed))
                    .map(|(k, _)| k.clone());
                match victim {
                    Some(k) => map.remove(&k),
                    None => break,
                };
            }
        }
        let entry = CacheEntry {
            query: query.to_string(),
            expansion,
            computed_ts: now,
            soft_ttl: self.config.soft_ttl_secs,
            hard_ttl: self.config.hard_ttl_secs,
        };
        map.insert(
            query.to_string(),
            Slot {
                entry,
                last_access: AtomicU64::new(self.tick.fetch_add(1, Ordering::Relaxed) + 1),
            },
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cache(soft: i64, hard: i64, cap: usize) -> ExpansionCache {
        ExpansionCache::new(CacheConfig {
            soft_ttl_secs: soft,
            hard_ttl_secs: hard,
            capacity: cap,
        })
    }

    #[test]
    fn fresh_stale_expired_transitions() {
        let c = cache(300, 3600, 10);
        c.put("q", "expansion".into(), 1000);
        let (e, f) = c.get("q", 1100).unwrap();
        assert_eq!(f, Freshness::Fresh);
        assert_eq!(e.expansion, "expansion");
        let (_, f) = c.get("q", 1000 + 301).unwrap();
        assert_eq!(f, Freshness::Stale);
        // exactly at soft ttl is still fresh; exactly at hard ttl still served
        assert_eq!(c.get("q", 1300).unwrap().1, Freshness::Fresh);
        assert!(c.get("q", 1000 + 3600).is_some());
        assert!(c.get("q", 1000 + 3601).is_none());
    }

    #[test]
    fn replacement_is_per_key() {
        let c = cache(300, 3600, 10);
        c.put("q", "old".into(), 1000);
        c.put("q", "new".into(), 2000);
        assert_eq!(c.len(), 1);
        assert_eq!(c.get("q", 2001).unwrap().0.expansion, "new");
    }

    #[test]
    fn capacity_evicts_least_recently_used() {
        let c = cache(300, 1_000_000, 2);
        c.put("a", "ea".into(), 1000);
        c.put("b", "eb".into(), 1000);
        // touch "a" so "b" is LRU
        c.get("a", 1001);
        c.put("c", "ec".into(), 1002);
        assert_eq!(c.len(), 2);
        assert!(c.get("b", 1003).is_none(), "LRU entry evicted");
        assert!(c.get("a", 1003).is_some());
        assert!(c.get("c", 1003).is_some());
    }

    #[test]
    fn expired_entries_evicted_before_live_ones() {
        let c = cache(1, 200, 2);
        c.put("old", "x".into(), 1000); // hard-expires at 1200
        c.put("live", "y".into(), 1500);
        // Inserting a third entry at capacity drops the expired one, not
        // the live one.
        c.put("new", "z".into(), 1600);
        assert!(c.get("live", 1601).is_some());
        assert!(c.get("new", 1601).is_some());
        assert!(c.get("old", 1601).is_none());
    }
}
