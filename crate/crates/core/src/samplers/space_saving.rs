//! Space saving: a fixed budget of counters; on a miss with a full table
//! the smallest counter is reassigned to the new key and bumped.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};

use crate::dist::Key;
use crate::error::{Error, Result};

use super::{Estimate, QueryMode, Sampler};

#[derive(Debug, Clone, Copy)]
struct Slot {
    count: u64,
    /// Logical timestamp of the last record touching this slot; makes
    /// eviction among equal-count entries deterministic.
    touched: u64,
}

/// Eviction order: lowest count first, most recently touched first among
/// equals. `(count, touched)` pairs are unique, so the victim is unique.
type EvictionIndex = BTreeSet<(u64, Reverse<u64>, Key)>;

#[derive(Debug, Clone, Default)]
pub struct SpaceSaving {
    capacity: usize,
    slots: HashMap<Key, Slot>,
    eviction: EvictionIndex,
    total: u64,
}

impl SpaceSaving {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter {
                name: "capacity",
                reason: "space saving needs at least one counter".into(),
            });
        }
        Ok(SpaceSaving {
            capacity,
            ..Default::default()
        })
    }

    /// Smallest live counter value; the bound on estimate overshoot.
    pub fn min_count(&self) -> u64 {
        self.eviction
            .first()
            .map(|&(count, _, _)| count)
            .unwrap_or(0)
    }
}

impl Sampler for SpaceSaving {
    fn record(&mut self, key: Key) {
        self.total += 1;
        let now = self.total;
        if let Some(slot) = self.slots.get_mut(&key) {
            self.eviction
                .remove(&(slot.count, Reverse(slot.touched), key));
            slot.count += 1;
            slot.touched = now;
            self.eviction.insert((slot.count, Reverse(now), key));
            return;
        }
        let count = if self.slots.len() < self.capacity {
            1
        } else {
            let &(min_count, Reverse(touched), victim) = self
                .eviction
                .first()
                .expect("table is full, hence non-empty");
            self.eviction.remove(&(min_count, Reverse(touched), victim));
            self.slots.remove(&victim);
            min_count + 1
        };
        self.slots.insert(
            key,
            Slot {
                count,
                touched: now,
            },
        );
        self.eviction.insert((count, Reverse(now), key));
    }

    fn query(&self, mode: QueryMode) -> Estimate {
        Estimate::new(
            self.slots
                .iter()
                .map(|(&k, s)| (k, s.count as f64))
                .collect(),
            self.total,
        )
        .filter(mode)
    }

    fn counter_count(&self) -> usize {
        self.slots.len()
    }

    fn total_processed(&self) -> u64 {
        self.total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::ExactCounting;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eviction_hand_trace() {
        // m = 2, stream [a, b, c]: the most recently touched of the two
        // minimum-count slots (b) is evicted, c enters with count min+1.
        let mut s = SpaceSaving::new(2).unwrap();
        for k in [1u64, 2, 3] {
            s.record(Key(k));
        }
        let est = s.query(QueryMode::all());
        assert_eq!(
            est.counts().collect::<Vec<_>>(),
            vec![(Key(1), 1.0), (Key(3), 2.0)]
        );
    }

    #[test]
    fn capacity_is_never_exceeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = SpaceSaving::new(8).unwrap();
        for _ in 0..10_000 {
            s.record(Key(rng.gen_range(1..1000)));
            assert!(s.counter_count() <= 8);
            assert_eq!(s.eviction.len(), s.slots.len());
        }
    }

    #[test]
    fn overshoot_bounded_by_min_counter() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ss = SpaceSaving::new(50).unwrap();
        let mut exact = ExactCounting::new();
        for _ in 0..50_000 {
            let key = Key(rng.gen_range(0.0f64..1.0).powi(3).mul_add(400.0, 1.0) as u64);
            ss.record(key);
            exact.record(key);
        }
        let bound = ss.min_count() as f64;
        let truth = exact.query(QueryMode::all());
        for (key, est) in ss.query(QueryMode::all()).counts() {
            let true_count = truth.count_of(key);
            assert!(est >= true_count, "space saving never underestimates");
            assert!(est - true_count <= bound);
        }
    }

    #[test]
    fn index_agrees_with_a_full_scan() {
        // The ordered index must always pick the same victim a linear
        // scan over the table would.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut s = SpaceSaving::new(16).unwrap();
        for _ in 0..5_000 {
            s.record(Key(rng.gen_range(1..200)));
            let scanned = s
                .slots
                .iter()
                .min_by_key(|(_, slot)| (slot.count, u64::MAX - slot.touched))
                .map(|(&k, &slot)| (slot.count, Reverse(slot.touched), k));
            assert_eq!(s.eviction.first().copied(), scanned);
        }
    }

    #[test]
    fn rejects_zero_capacity() {
        assert!(SpaceSaving::new(0).is_err());
    }
}
