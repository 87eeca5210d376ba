//! One counter per distinct key; the reference the approximate samplers
//! are tested against.

use std::collections::HashMap;

use crate::dist::Key;

use super::{Estimate, QueryMode, Sampler};

#[derive(Debug, Default, Clone)]
pub struct ExactCounting {
    counts: HashMap<Key, u64>,
    total: u64,
}

impl ExactCounting {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Sampler for ExactCounting {
    fn record(&mut self, key: Key) {
        self.total += 1;
        *self.counts.entry(key).or_insert(0) += 1;
    }

    fn query(&self, mode: QueryMode) -> Estimate {
        Estimate::new(
            self.counts.iter().map(|(&k, &c)| (k, c as f64)).collect(),
            self.total,
        )
        .filter(mode)
    }

    fn counter_count(&self) -> usize {
        self.counts.len()
    }

    fn total_processed(&self) -> u64 {
        self.total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_are_exact() {
        let mut s = ExactCounting::new();
        for k in [1u64, 1, 2, 1, 3] {
            s.record(Key(k));
        }
        let est = s.query(QueryMode::all());
        assert_eq!(est.count_of(Key(1)), 3.0);
        assert_eq!(est.count_of(Key(2)), 1.0);
        assert_eq!(est.count_of(Key(3)), 1.0);
        assert_eq!(s.counter_count(), 3);
        assert_eq!(s.total_processed(), 5);
    }

    #[test]
    fn threshold_example() {
        let mut s = ExactCounting::new();
        for k in [1u64, 1, 2] {
            s.record(Key(k));
        }
        // phi = 0.5 over 3 elements keeps only counts >= 1.5.
        let est = s.query(QueryMode::threshold(0.5).unwrap());
        assert_eq!(est.counts().collect::<Vec<_>>(), vec![(Key(1), 2.0)]);
    }
}
