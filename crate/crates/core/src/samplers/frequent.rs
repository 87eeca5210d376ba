//! Jumping-window top-k: exact per-basic-window synopses for the last
//! `w` windows; queries sum the retained synopses, so old traffic ages
//! out after `w` window turns.

use std::collections::{HashMap, VecDeque};

use crate::dist::Key;
use crate::error::{Error, Result};

use super::{Estimate, QueryMode, Sampler};

#[derive(Debug, Clone)]
pub struct Frequent {
    basic_window: u64,
    windows: usize,
    k: usize,
    current: HashMap<Key, u64>,
    in_window: u64,
    synopses: VecDeque<Vec<(Key, u64)>>,
    total: u64,
}

impl Frequent {
    pub fn new(basic_window: u64, windows: usize, k: usize) -> Result<Self> {
        if basic_window == 0 {
            return Err(Error::InvalidParameter {
                name: "basic_window",
                reason: "basic window must be at least 1".into(),
            });
        }
        if windows == 0 || k == 0 {
            return Err(Error::InvalidParameter {
                name: "windows",
                reason: "need at least one window and k >= 1".into(),
            });
        }
        Ok(Frequent {
            basic_window,
            windows,
            k,
            current: HashMap::new(),
            in_window: 0,
            synopses: VecDeque::new(),
            total: 0,
        })
    }
}

impl Sampler for Frequent {
    fn record(&mut self, key: Key) {
        self.total += 1;
        self.in_window += 1;
        *self.current.entry(key).or_insert(0) += 1;
        if self.in_window == self.basic_window {
            let mut ranked: Vec<(Key, u64)> = self.current.drain().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            ranked.truncate(self.k);
            self.synopses.push_back(ranked);
            if self.synopses.len() > self.windows {
                self.synopses.pop_front();
            }
            self.in_window = 0;
        }
    }

    fn query(&self, mode: QueryMode) -> Estimate {
        let mut counts = std::collections::BTreeMap::new();
        for synopsis in &self.synopses {
            for &(key, count) in synopsis {
                *counts.entry(key).or_insert(0.0) += count as f64;
            }
        }
        Estimate::new(counts, self.total).filter(mode)
    }

    fn counter_count(&self) -> usize {
        self.current.len() + self.synopses.iter().map(Vec::len).sum::<usize>()
    }

    fn total_processed(&self) -> u64 {
        self.total
    }
}
