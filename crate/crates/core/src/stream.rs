//! Stream metadata and in-memory stream buffers.
//!
//! Metadata stores drift distributions as *specs* (a Zipf recipe or
//! explicit weights) rather than materialized maps, so that consecutive
//! drifts sharing a spec materialize to bit-identical distributions and
//! the continuity rule can be checked with exact equality.

use serde::{Deserialize, Serialize};

use crate::dist::{Key, ProbDist};
use crate::drift::{Drift, DriftSet};
use crate::error::{Error, Result};
use crate::generator::{zipfian_dist, BurstEvent};

/// Provenance of one drift-side distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistSpec {
    /// Zipfian over the full key universe; ranks are mapped to keys by a
    /// seed-determined permutation (`None` keeps the identity mapping).
    Zipf {
        exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        perm_seed: Option<u64>,
    },
    /// Explicit key/weight pairs; weights must sum to 1.
    Explicit { weights: Vec<(u64, f64)> },
}

impl DistSpec {
    pub fn materialize(&self, num_keys: u64) -> Result<ProbDist> {
        match self {
            DistSpec::Zipf {
                exponent,
                perm_seed,
            } => zipfian_dist(num_keys, *exponent, *perm_seed),
            DistSpec::Explicit { weights } => {
                ProbDist::new(weights.iter().map(|&(k, w)| (Key(k), w)).collect())
            }
        }
    }
}

/// One drift described by specs instead of materialized distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub len: u64,
    /// Doubled midpoint, kept integral so half-integer midpoints stay exact.
    pub mid_x2: u64,
    pub p1: DistSpec,
    pub p2: DistSpec,
}

impl DriftSpec {
    pub fn abrupt(at: u64, p1: DistSpec, p2: DistSpec) -> Self {
        DriftSpec {
            len: 0,
            mid_x2: 2 * at,
            p1,
            p2,
        }
    }

    pub fn gradual(start: u64, end: u64, p1: DistSpec, p2: DistSpec) -> Self {
        DriftSpec {
            len: end - start,
            mid_x2: end + start,
            p1,
            p2,
        }
    }
}

/// Everything needed to regenerate and to correctly judge a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMetadata {
    /// Stream length.
    pub n: u64,
    /// Key universe size; keys are `1..=num_keys`.
    pub num_keys: u64,
    /// Master seed the stream was generated from.
    pub seed: u64,
    pub drifts: Vec<DriftSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burst_log: Option<Vec<BurstEvent>>,
    /// Fingerprint of the producing configuration, if written by the CLI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
}

impl StreamMetadata {
    pub fn new(n: u64, num_keys: u64, seed: u64, drifts: Vec<DriftSpec>) -> Self {
        StreamMetadata {
            n,
            num_keys,
            seed,
            drifts,
            burst_log: None,
            fingerprint: None,
        }
    }

    /// Materializes the drift specs into a concrete [`DriftSet`].
    pub fn drift_set(&self) -> Result<DriftSet> {
        if self.num_keys == 0 {
            return Err(Error::InvalidParameter {
                name: "num_keys",
                reason: "key universe is empty".into(),
            });
        }
        let mut drifts = Vec::with_capacity(self.drifts.len());
        for spec in &self.drifts {
            drifts.push(Drift::raw(
                spec.len,
                spec.mid_x2,
                spec.p1.materialize(self.num_keys)?,
                spec.p2.materialize(self.num_keys)?,
            ));
        }
        Ok(DriftSet::new(drifts, self.n))
    }

    /// All keys of the declared universe.
    pub fn universe(&self) -> impl Iterator<Item = Key> {
        (1..=self.num_keys).map(Key)
    }
}

/// A fully materialized stream plus the metadata that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamBuffer {
    pub keys: Vec<Key>,
    pub metadata: StreamMetadata,
}

impl StreamBuffer {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}
