//! The uniform sampler contract and the baseline streaming frequency
//! estimators: each algorithm processes one element at a time, inspects
//! it at most once, and can report its current estimate at any time.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adaptive::{CheckpointSmoothed, OracleSampler, TemporalSmoothed};
use crate::dist::{Key, ProbDist};
use crate::drift::DriftSet;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

mod exact;
mod frequent;
mod landmark;
mod lossy;
mod space_saving;
mod sticky;

pub use exact::ExactCounting;
pub use frequent::Frequent;
pub use landmark::Landmark;
pub use lossy::LossyCounting;
pub use space_saving::SpaceSaving;
pub use sticky::StickySampling;

/// How a query truncates the live counters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryMode(Mode);

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    TopK(usize),
    Threshold(f64),
}

impl QueryMode {
    /// At most `k` keys of highest estimated count, ties broken toward
    /// the smaller key id.
    pub fn top_k(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "top-K query needs k >= 1".into(),
            });
        }
        Ok(QueryMode(Mode::TopK(k)))
    }

    /// Every key whose estimated count reaches `phi · totalProcessed`.
    pub fn threshold(phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&phi) {
            return Err(Error::InvalidParameter {
                name: "phi",
                reason: format!("threshold must be in [0, 1], got {phi}"),
            });
        }
        Ok(QueryMode(Mode::Threshold(phi)))
    }

    /// No truncation: every live counter.
    pub fn all() -> Self {
        QueryMode(Mode::Threshold(0.0))
    }
}

/// A sampler's report: estimated counts plus the number of elements the
/// sampler has processed.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    counts: BTreeMap<Key, f64>,
    total: u64,
}

impl Estimate {
    pub fn new(counts: BTreeMap<Key, f64>, total: u64) -> Self {
        Estimate { counts, total }
    }

    pub fn counts(&self) -> impl Iterator<Item = (Key, f64)> + '_ {
        self.counts.iter().map(|(&k, &c)| (k, c))
    }

    pub fn count_of(&self, key: Key) -> f64 {
        self.counts.get(&key).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Applies top-K / threshold truncation.
    pub fn filter(&self, mode: QueryMode) -> Estimate {
        match mode.0 {
            Mode::Threshold(phi) => {
                let bound = phi * self.total as f64;
                Estimate {
                    counts: self
                        .counts
                        .iter()
                        .filter(|(_, &c)| c >= bound)
                        .map(|(&k, &c)| (k, c))
                        .collect(),
                    total: self.total,
                }
            }
            Mode::TopK(k) => {
                let mut ranked: Vec<(Key, f64)> =
                    self.counts.iter().map(|(&k, &c)| (k, c)).collect();
                ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                ranked.truncate(k);
                Estimate {
                    counts: ranked.into_iter().collect(),
                    total: self.total,
                }
            }
        }
    }

    /// Counts normalized by their sum: a proper distribution over the
    /// reported keys, or `None` when nothing was reported.
    pub fn relative_frequencies(&self) -> Option<ProbDist> {
        if self.counts.is_empty() {
            return None;
        }
        ProbDist::normalized(self.counts.clone()).ok()
    }
}

/// The contract every frequency estimator satisfies.
pub trait Sampler {
    /// Processes one element; each element is seen at most once.
    fn record(&mut self, key: Key);

    /// Reports the current estimate under the given truncation. Available
    /// at any time.
    fn query(&self, mode: QueryMode) -> Estimate;

    /// Number of live counters, the memory metric of the benchmarks.
    fn counter_count(&self) -> usize;

    fn total_processed(&self) -> u64;
}

/// Declarative sampler description: serializable for configs, buildable
/// into a running instance, and printable as the algorithm id used in
/// benchmark outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum SamplerSpec {
    ExactCounting,
    LossyCounting {
        epsilon: f64,
    },
    SpaceSaving {
        capacity: usize,
    },
    StickySampling {
        support: f64,
        error: f64,
        failure: f64,
    },
    Frequent {
        basic_window: u64,
        windows: usize,
        k: usize,
    },
    Landmark {
        inner: Box<SamplerSpec>,
        window: u64,
    },
    TemporalSmoothed {
        inner: Box<SamplerSpec>,
        threshold: u64,
        switch_threshold: u64,
    },
    CheckpointSmoothed {
        inner: Box<SamplerSpec>,
        checkpoint_window: u64,
        check_threshold: u64,
        error_threshold: f64,
    },
    /// Metadata-backed baseline; only buildable when the harness supplies
    /// the stream's drift set.
    Oracle,
}

impl SamplerSpec {
    /// Builds a fresh instance. `oracle_env` carries the materialized
    /// drift set an [`SamplerSpec::Oracle`] needs.
    pub fn build(&self, seed: u64, oracle_env: Option<&Arc<DriftSet>>) -> Result<Box<dyn Sampler>> {
        Ok(match self {
            SamplerSpec::ExactCounting => Box::new(ExactCounting::new()),
            SamplerSpec::LossyCounting { epsilon } => Box::new(LossyCounting::new(*epsilon)?),
            SamplerSpec::SpaceSaving { capacity } => Box::new(SpaceSaving::new(*capacity)?),
            SamplerSpec::StickySampling {
                support,
                error,
                failure,
            } => Box::new(StickySampling::new(*support, *error, *failure, seed)?),
            SamplerSpec::Frequent {
                basic_window,
                windows,
                k,
            } => Box::new(Frequent::new(*basic_window, *windows, *k)?),
            SamplerSpec::Landmark { inner, window } => Box::new(Landmark::new(
                InnerFactory::new((**inner).clone(), seed, oracle_env.cloned()),
                *window,
            )?),
            SamplerSpec::TemporalSmoothed {
                inner,
                threshold,
                switch_threshold,
            } => Box::new(TemporalSmoothed::new(
                InnerFactory::new((**inner).clone(), seed, oracle_env.cloned()),
                *threshold,
                *switch_threshold,
            )?),
            SamplerSpec::CheckpointSmoothed {
                inner,
                checkpoint_window,
                check_threshold,
                error_threshold,
            } => Box::new(CheckpointSmoothed::new(
                InnerFactory::new((**inner).clone(), seed, oracle_env.cloned()),
                *checkpoint_window,
                *check_threshold,
                *error_threshold,
            )?),
            SamplerSpec::Oracle => {
                let drifts = oracle_env.ok_or(Error::InvalidParameter {
                    name: "oracle",
                    reason: "the oracle needs stream metadata to run".into(),
                })?;
                Box::new(OracleSampler::new(Arc::clone(drifts)))
            }
        })
    }
}

impl std::fmt::Display for SamplerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplerSpec::ExactCounting => write!(f, "exact"),
            SamplerSpec::LossyCounting { epsilon } => write!(f, "lossy[eps={epsilon}]"),
            SamplerSpec::SpaceSaving { capacity } => write!(f, "space-saving[m={capacity}]"),
            SamplerSpec::StickySampling { support, error, failure } => {
                write!(f, "sticky[s={support};eps={error};delta={failure}]")
            }
            SamplerSpec::Frequent { basic_window, windows, k } => {
                write!(f, "frequent[b={basic_window};w={windows};k={k}]")
            }
            SamplerSpec::Landmark { inner, window } => {
                write!(f, "landmark[t={window};inner={inner}]")
            }
            SamplerSpec::TemporalSmoothed { inner, threshold, switch_threshold } => {
                write!(f, "tmp[t={threshold};st={switch_threshold};inner={inner}]")
            }
            SamplerSpec::CheckpointSmoothed {
                inner,
                checkpoint_window,
                check_threshold,
                error_threshold,
            } => write!(
                f,
                "cps[cw={checkpoint_window};ct={check_threshold};et={error_threshold};inner={inner}]"
            ),
            SamplerSpec::Oracle => write!(f, "oracle"),
        }
    }
}

/// Spawns successive inner-sampler instances for the wrapping algorithms,
/// giving each spawn its own derived RNG stream.
pub struct InnerFactory {
    spec: SamplerSpec,
    seed: u64,
    oracle_env: Option<Arc<DriftSet>>,
    built: u64,
}

impl InnerFactory {
    pub fn new(spec: SamplerSpec, seed: u64, oracle_env: Option<Arc<DriftSet>>) -> Self {
        InnerFactory {
            spec,
            seed,
            oracle_env,
            built: 0,
        }
    }

    /// Validates the inner spec by building a throwaway instance.
    pub fn validate(&self) -> Result<()> {
        self.spec
            .build(self.seed, self.oracle_env.as_ref())
            .map(|_| ())
    }

    pub fn spawn(&mut self) -> Box<dyn Sampler> {
        self.built += 1;
        let seed = derive_seed(self.seed, &format!("inner:{}", self.built));
        self.spec
            .build(seed, self.oracle_env.as_ref())
            .expect("inner spec was validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(sampler: &mut dyn Sampler, keys: &[u64]) {
        for &k in keys {
            sampler.record(Key(k));
        }
    }

    #[test]
    fn threshold_query_matches_brute_force_filter() {
        let mut s = ExactCounting::new();
        run(&mut s, &[1, 1, 1, 2, 2, 3]);
        let full = s.query(QueryMode::all());
        let phi = 0.33;
        let thresholded = s.query(QueryMode::threshold(phi).unwrap());
        let bound = phi * s.total_processed() as f64;
        let expected: Vec<(Key, f64)> = full.counts().filter(|&(_, c)| c >= bound).collect();
        assert_eq!(thresholded.counts().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn top_k_breaks_ties_toward_smaller_keys() {
        let mut s = ExactCounting::new();
        run(&mut s, &[5, 3, 9, 3, 9, 5]);
        let top = s.query(QueryMode::top_k(2).unwrap());
        let keys: Vec<Key> = top.counts().map(|(k, _)| k).collect();
        assert_eq!(keys, vec![Key(3), Key(5)]);
    }

    #[test]
    fn top_k_larger_than_live_counters_is_a_no_op() {
        let mut s = ExactCounting::new();
        run(&mut s, &[1, 2, 3]);
        let top = s.query(QueryMode::top_k(100).unwrap());
        assert_eq!(top.len(), 3);
    }

    #[test]
    fn zero_threshold_returns_every_counter() {
        let mut s = ExactCounting::new();
        run(&mut s, &[1, 2, 3]);
        let all = s.query(QueryMode::threshold(0.0).unwrap());
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn query_mode_validation() {
        assert!(QueryMode::top_k(0).is_err());
        assert!(QueryMode::threshold(-0.1).is_err());
        assert!(QueryMode::threshold(1.5).is_err());
    }

    #[test]
    fn sampler_spec_ids_are_stable() {
        let spec = SamplerSpec::TemporalSmoothed {
            inner: Box::new(SamplerSpec::LossyCounting { epsilon: 0.0001 }),
            threshold: 40000,
            switch_threshold: 40000,
        };
        assert_eq!(
            spec.to_string(),
            "tmp[t=40000;st=40000;inner=lossy[eps=0.0001]]"
        );
    }

    #[test]
    fn sampler_spec_round_trips_through_json() {
        let spec = SamplerSpec::CheckpointSmoothed {
            inner: Box::new(SamplerSpec::LossyCounting { epsilon: 0.0001 }),
            checkpoint_window: 40000,
            check_threshold: 40000,
            error_threshold: 0.2,
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: SamplerSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }
}
