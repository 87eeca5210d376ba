//! Lossy counting: deterministic counting with periodic pruning at
//! bucket boundaries of width `ceil(1/ε)`. Estimates never exceed the
//! true count and undershoot it by at most `ε·N`.

use std::collections::HashMap;

use crate::dist::Key;
use crate::error::{Error, Result};

use super::{Estimate, QueryMode, Sampler};

#[derive(Debug, Clone, Copy)]
struct Entry {
    count: u64,
    /// Upper bound on occurrences missed before this entry was admitted.
    delta: u64,
}

#[derive(Debug, Clone)]
pub struct LossyCounting {
    width: u64,
    entries: HashMap<Key, Entry>,
    total: u64,
}

impl LossyCounting {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be in (0, 1], got {epsilon}"),
            });
        }
        Ok(LossyCounting {
            width: (1.0 / epsilon).ceil() as u64,
            entries: HashMap::new(),
            total: 0,
        })
    }

    fn current_bucket(&self) -> u64 {
        self.total.div_ceil(self.width)
    }
}

impl Sampler for LossyCounting {
    fn record(&mut self, key: Key) {
        self.total += 1;
        let bucket = self.current_bucket();
        self.entries
            .entry(key)
            .or_insert(Entry {
                count: 0,
                // Entries admitted during the first two buckets carry no
                // error slack; the first boundary never prunes anything.
                delta: bucket.saturating_sub(2),
            })
            .count += 1;
        if self.total.is_multiple_of(self.width) {
            let bucket = self.total / self.width;
            self.entries.retain(|_, e| e.count + e.delta >= bucket);
        }
    }

    fn query(&self, mode: QueryMode) -> Estimate {
        Estimate::new(
            self.entries
                .iter()
                .map(|(&k, e)| (k, e.count as f64))
                .collect(),
            self.total,
        )
        .filter(mode)
    }

    fn counter_count(&self) -> usize {
        self.entries.len()
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
    fn boundary_pruning_hand_trace() {
        // eps = 0.5 gives bucket width 2; after [a, a, b, c] only the
        // repeated key survives the second boundary.
        let mut s = LossyCounting::new(0.5).unwrap();
        for k in [1u64, 1, 2, 3] {
            s.record(Key(k));
        }
        let est = s.query(QueryMode::all());
        assert_eq!(est.counts().collect::<Vec<_>>(), vec![(Key(1), 2.0)]);
        assert_eq!(s.counter_count(), 1);
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(LossyCounting::new(0.0).is_err());
        assert!(LossyCounting::new(1.5).is_err());
    }

    #[test]
    fn estimates_within_epsilon_of_truth_on_random_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for round in 0..10 {
            let epsilon = [0.1, 0.01, 0.001][round % 3];
            let n = rng.gen_range(10_000..100_000u64);
            let mut lossy = LossyCounting::new(epsilon).unwrap();
            let mut exact = ExactCounting::new();
            let universe = rng.gen_range(10..500);
            for _ in 0..n {
                // Skewed stream: low keys vastly more frequent.
                let key = Key(rng
                    .gen_range(0.0f64..1.0)
                    .powi(3)
                    .mul_add(universe as f64, 1.0) as u64);
                lossy.record(key);
                exact.record(key);
            }
            let truth = exact.query(QueryMode::all());
            let estimate = lossy.query(QueryMode::all());
            let slack = epsilon * n as f64;
            for (key, true_count) in truth.counts() {
                let est = estimate.count_of(key);
                assert!(est <= true_count, "overestimate for {key}");
                assert!(
                    est >= true_count - slack,
                    "undershoot beyond eps*N for {key}: {est} < {true_count} - {slack}"
                );
            }
        }
    }
}
