use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct CacheKey {
    pub fingerprint: u64,
    pub target: usize,
    pub parents: u64,
    pub hyper: u64,
}

#[derive(Debug)]
struct Entry {
    value: f64,
    last_used: AtomicU64,
}

/// Family-score cache. Concurrent readers share the lock; writers race
/// benignly since values are pure functions of the key.
#[derive(Debug)]
pub struct ScoreCache {
    map: RwLock<HashMap<CacheKey, Entry>>,
    cap: Option<usize>,
    tick: AtomicU64,
}

impl ScoreCache {
    /// `cap = None` keeps every entry.
    pub fn new(cap: Option<usize>) -> Self {
        ScoreCache {
            map: RwLock::new(HashMap::new()),
            cap: cap.map(|c| c.max(1)),
            tick: AtomicU64::new(0),
        }
    }

    pub(crate) fn get(&self, key: &CacheKey) -> Option<f64> {
        let map = self.map.read().unwrap_or_else(|e| e.into_inner());
        let e = map.get(key)?;
        e.last_used
            .store(self.tick.fetch_add(1, Ordering::Relaxed), Ordering::Relaxed);
        Some(e.value)
    }

    pub(crate) fn insert(&self, key: CacheKey, value: f64) {
        let mut map = self.map.write().unwrap_or_else(|e| e.into_inner());
        if let Some(cap) = self.cap {
            if map.len() >= cap && !map.contains_key(&key) {
                let oldest = map
                    .iter()
                    .min_by_key(|(_, e)| e.last_used.load(Ordering::Relaxed))
                    .map(|(k, _)| *k);
                if let Some(k) = oldest {
                    map.remove(&k);
                }
            }
        }
        let tick = self.tick.fetch_add(1, Ordering::Relaxed);
        map.insert(
            key,
            Entry {
                value,
                last_used: AtomicU64::new(tick),
            },
        );
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.write().unwrap_or_else(|e| e.into_inner()).clear();
    }
}

impl Default for ScoreCache {
    fn default() -> Self {
        ScoreCache::new(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(t: usize) -> CacheKey {
        CacheKey {
            fingerprint: 1,
            target: t,
            parents: 0,
            hyper: 7,
        }
    }

    #[test]
    fn evicts_least_recently_used() {
        let c = ScoreCache::new(Some(2));
        c.insert(key(0), 0.0);
        c.insert(key(1), 1.0);
        assert_eq!(c.get(&key(0)), Some(0.0));
        c.insert(key(2), 2.0);
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(&key(1)), None);
        assert_eq!(c.get(&key(0)), Some(0.0));
        assert_eq!(c.get(&key(2)), Some(2.0));
    }

    #[test]
    fn unbounded_by_default() {
        let c = ScoreCache::default();
        for t in 0..100 {
            c.insert(key(t), t as f64);
        }
        assert_eq!(c.len(), 100);
        c.clear();
        assert!(c.is_empty());
    }
}
