//! Keys and discrete probability distributions over them.
//!
//! [`ProbDist`] is the currency every other module trades in: drift
//! endpoints, oracle reports, sampler relative frequencies and metric
//! inputs are all values of this type.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(weights) == 1` accepted at construction time.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A stream element. Keys live in a finite universe `[1, num_keys]`
/// declared by the stream metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Key(pub u64);

impl std::fmt::Display for Key {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for Key {
    fn from(id: u64) -> Self {
        Key(id)
    }
}

/// A discrete probability distribution over keys.
///
/// Invariants enforced at construction: every weight is positive (exact
/// zeros are dropped, keys absent from the map have implicit probability
/// zero) and the weights sum to 1 within [`SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    weights: BTreeMap<Key, f64>,
}

impl ProbDist {
    /// Builds a distribution from explicit weights, rejecting negative
    /// entries and sums that deviate from 1 beyond [`SUM_TOLERANCE`].
    pub fn new(weights: BTreeMap<Key, f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (key, &w) in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "weight of key {key} is {w}"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        let weights = weights.into_iter().filter(|&(_, w)| w > 0.0).collect();
        Ok(ProbDist { weights })
    }

    /// Builds a distribution by rescaling arbitrary non-negative weights.
    pub fn normalized(weights: BTreeMap<Key, f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (key, &w) in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "weight of key {key} is {w}"
                )));
            }
            sum += w;
        }
        if sum <= 0.0 {
            return Err(Error::InvalidDistribution(
                "cannot normalize all-zero weights".into(),
            ));
        }
        let weights = weights
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|(k, w)| (k, w / sum))
            .collect();
        Ok(ProbDist { weights })
    }

    /// The degenerate distribution concentrated on one key.
    pub fn point_mass(key: Key) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(key, 1.0);
        ProbDist { weights }
    }

    /// Uniform distribution over the given keys. Errors on an empty set.
    pub fn uniform<I: IntoIterator<Item = Key>>(keys: I) -> Result<Self> {
        let keys: Vec<Key> = keys.into_iter().collect();
        if keys.is_empty() {
            return Err(Error::EmptyInput("uniform distribution over no keys"));
        }
        let w = 1.0 / keys.len() as f64;
        Ok(ProbDist {
            weights: keys.into_iter().map(|k| (k, w)).collect(),
        })
    }

    /// Probability of `key`; zero when absent.
    pub fn weight(&self, key: Key) -> f64 {
        self.weights.get(&key).copied().unwrap_or(0.0)
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    /// Key/weight pairs in ascending key order.
    pub fn iter(&self) -> impl Iterator<Item = (Key, f64)> + '_ {
        self.weights.iter().map(|(&k, &w)| (k, w))
    }

    pub fn keys(&self) -> impl Iterator<Item = Key> + '_ {
        self.weights.keys().copied()
    }

    /// Linear mixture `(1-q)·self + q·other`.
    ///
    /// The endpoints return exact clones so that a mixture at `q = 0`
    /// compares equal to `self` key for key.
    pub fn mix(&self, other: &ProbDist, q: f64) -> ProbDist {
        debug_assert!((0.0..=1.0).contains(&q));
        if q == 0.0 {
            return self.clone();
        }
        if q == 1.0 {
            return other.clone();
        }
        let mut weights = BTreeMap::new();
        for (k, w) in self.iter() {
            weights.insert(k, (1.0 - q) * w);
        }
        for (k, w) in other.iter() {
            *weights.entry(k).or_insert(0.0) += q * w;
        }
        weights.retain(|_, w| *w > 0.0);
        ProbDist { weights }
    }

    /// Pointwise comparison over the union support.
    pub fn approx_eq(&self, other: &ProbDist, tol: f64) -> bool {
        self.keys()
            .chain(other.keys())
            .all(|k| (self.weight(k) - other.weight(k)).abs() <= tol)
    }

    /// Smallest positive probability, if any.
    pub fn min_positive(&self) -> Option<f64> {
        self.weights
            .values()
            .copied()
            .fold(None, |acc, w| match acc {
                Some(m) if m <= w => Some(m),
                _ => Some(w),
            })
    }
}

/// Precomputed cumulative table for drawing keys from a [`ProbDist`] with
/// one uniform variate and a binary search.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    cumulative: Vec<f64>,
    keys: Vec<Key>,
}

impl CumulativeTable {
    pub fn new(dist: &ProbDist) -> Self {
        let mut cumulative = Vec::with_capacity(dist.support_len());
        let mut keys = Vec::with_capacity(dist.support_len());
        let mut acc = 0.0;
        for (key, w) in dist.iter() {
            acc += w;
            cumulative.push(acc);
            keys.push(key);
        }
        CumulativeTable { cumulative, keys }
    }

    /// Maps a uniform variate `u ∈ [0, 1)` to a key.
    pub fn sample(&self, u: f64) -> Key {
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // Floating-point prefix sums can fall a hair short of 1.
        self.keys[idx.min(self.keys.len() - 1)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(u64, f64)]) -> ProbDist {
        ProbDist::new(pairs.iter().map(|&(k, w)| (Key(k), w)).collect()).unwrap()
    }

    #[test]
    fn rejects_unnormalized_weights() {
        let err = ProbDist::new([(Key(1), 0.5), (Key(2), 0.6)].into_iter().collect());
        assert!(matches!(err, Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn rejects_negative_weights() {
        let err = ProbDist::new([(Key(1), 1.5), (Key(2), -0.5)].into_iter().collect());
        assert!(matches!(err, Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn drops_zero_entries() {
        let d = dist(&[(1, 1.0), (2, 0.0)]);
        assert_eq!(d.support_len(), 1);
        assert_eq!(d.weight(Key(2)), 0.0);
    }

    #[test]
    fn mixture_endpoints_are_exact() {
        let p1 = dist(&[(1, 0.7), (2, 0.3)]);
        let p2 = dist(&[(2, 0.4), (3, 0.6)]);
        assert_eq!(p1.mix(&p2, 0.0), p1);
        assert_eq!(p1.mix(&p2, 1.0), p2);
        let mid = p1.mix(&p2, 0.5);
        assert!((mid.weight(Key(1)) - 0.35).abs() < 1e-15);
        assert!((mid.weight(Key(2)) - 0.35).abs() < 1e-15);
        assert!((mid.weight(Key(3)) - 0.30).abs() < 1e-15);
    }

    #[test]
    fn mixture_stays_normalized() {
        let p1 = dist(&[(1, 0.25), (2, 0.75)]);
        let p2 = dist(&[(5, 1.0)]);
        for q in [0.1, 0.33, 0.5, 0.99] {
            let m = p1.mix(&p2, q);
            let sum: f64 = m.iter().map(|(_, w)| w).sum();
            assert!((sum - 1.0).abs() <= SUM_TOLERANCE);
        }
    }

    #[test]
    fn cumulative_table_covers_unit_interval() {
        let d = dist(&[(1, 0.25), (2, 0.5), (3, 0.25)]);
        let table = CumulativeTable::new(&d);
        assert_eq!(table.sample(0.0), Key(1));
        assert_eq!(table.sample(0.24), Key(1));
        assert_eq!(table.sample(0.25), Key(2));
        assert_eq!(table.sample(0.74), Key(2));
        assert_eq!(table.sample(0.75), Key(3));
        assert_eq!(table.sample(0.999999), Key(3));
    }
}
