//! Sticky sampling: probabilistic admission with a rate that doubles
//! every `2t` elements, `t = (1/ε)·ln(1/(s·δ))`. Existing keys are always
//! counted; on each rate change the entries are thinned geometrically.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dist::Key;
use crate::error::{Error, Result};

use super::{Estimate, QueryMode, Sampler};

#[derive(Debug, Clone)]
pub struct StickySampling {
    epoch_len: u64,
    rate: u64,
    counts: HashMap<Key, u64>,
    total: u64,
    rng: ChaCha8Rng,
}

impl StickySampling {
    pub fn new(support: f64, error: f64, failure: f64, seed: u64) -> Result<Self> {
        for (name, value) in [("support", support), ("error", error), ("failure", failure)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be in (0, 1), got {value}"),
                });
            }
        }
        let t = (1.0 / error) * (1.0 / (support * failure)).ln();
        let epoch_len = (2.0 * t).ceil().max(1.0) as u64;
        Ok(StickySampling {
            epoch_len,
            rate: 1,
            counts: HashMap::new(),
            total: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Length of the rate-1 prefix during which counting is exact.
    pub fn epoch_len(&self) -> u64 {
        self.epoch_len
    }

    fn thin_entries(&mut self) {
        // Sorted traversal keeps the RNG consumption order deterministic.
        let mut keys: Vec<Key> = self.counts.keys().copied().collect();
        keys.sort();
        for key in keys {
            let count = self.counts.get_mut(&key).expect("key collected above");
            // Toss an unbiased coin until it lands heads, decrementing
            // once per tails.
            while !self.rng.gen_bool(0.5) {
                *count -= 1;
                if *count == 0 {
                    self.counts.remove(&key);
                    break;
                }
            }
        }
    }
}

impl Sampler for StickySampling {
    fn record(&mut self, key: Key) {
        self.total += 1;
        let epoch = ((self.total - 1) / self.epoch_len).min(62);
        let desired_rate = 1u64 << epoch;
        while self.rate < desired_rate {
            self.rate *= 2;
            self.thin_entries();
        }
        if let Some(count) = self.counts.get_mut(&key) {
            *count += 1;
            return;
        }
        if self.rate == 1 || self.rng.gen_range(0..self.rate) == 0 {
            self.counts.insert(key, 1);
        }
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
