//! Error measures: distribution difference (Hellinger, smoothed KL),
//! partition load imbalance, and exact ground-truth counting.

use crate::dist::{Key, ProbDist};
use crate::error::{Error, Result};
use crate::samplers::{Estimate, QueryMode};
use crate::stream::StreamBuffer;

/// Distances below this are clamped to zero.
const DISTANCE_CLAMP: f64 = 1e-12;

/// Hellinger distance between two distributions:
/// `(1/√2)·sqrt(Σ (√p(x) - √q(x))²)` over the union support, with missing
/// keys contributing probability zero. Bounded in `[0, 1]`; a metric.
pub fn hellinger(p: &ProbDist, q: &ProbDist) -> f64 {
    let mut sum = 0.0;
    let mut pi = p.iter().peekable();
    let mut qi = q.iter().peekable();
    loop {
        match (pi.peek().copied(), qi.peek().copied()) {
            (Some((pk, pw)), Some((qk, qw))) => {
                if pk < qk {
                    sum += pw;
                    pi.next();
                } else if qk < pk {
                    sum += qw;
                    qi.next();
                } else {
                    let d = pw.sqrt() - qw.sqrt();
                    sum += d * d;
                    pi.next();
                    qi.next();
                }
            }
            (Some((_, pw)), None) => {
                sum += pw;
                pi.next();
            }
            (None, Some((_, qw))) => {
                sum += qw;
                qi.next();
            }
            (None, None) => break,
        }
    }
    let h = (sum / 2.0).sqrt();
    if h < DISTANCE_CLAMP {
        0.0
    } else {
        h.min(1.0)
    }
}

/// Kullback-Leibler divergence `KL(p ‖ q)` in nats, made finite by
/// ε-smoothing `q` over the keys of `p` it is missing.
///
/// `ε = eps_fraction · (minimum positive probability across both inputs)`;
/// each missing key enters `q` with probability `ε` and every original
/// `q` entry is reduced by `ε·z/n` (`z` added keys, `n` original support
/// size) so the weights still sum to 1. Keys missing from `p` contribute
/// nothing, so `p` itself is never smoothed.
pub fn kl_divergence_smoothed(p: &ProbDist, q: &ProbDist, eps_fraction: f64) -> Result<f64> {
    if !(eps_fraction > 0.0 && eps_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps_fraction",
            reason: format!("must be in (0, 1), got {eps_fraction}"),
        });
    }
    let missing: Vec<Key> = p.keys().filter(|&k| q.weight(k) == 0.0).collect();
    let z = missing.len();
    let (eps, correction) = if z == 0 {
        (0.0, 0.0)
    } else {
        let min_positive = p
            .min_positive()
            .into_iter()
            .chain(q.min_positive())
            .fold(f64::INFINITY, f64::min);
        let eps = eps_fraction * min_positive;
        (eps, eps * z as f64 / q.support_len() as f64)
    };
    let q_of = |k: Key| {
        let w = q.weight(k);
        if w > 0.0 {
            w - correction
        } else {
            eps
        }
    };
    let mut kl = 0.0;
    for (k, pw) in p.iter() {
        let qw = q_of(k);
        if qw <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "smoothing drove the weight of key {k} to {qw}"
            )));
        }
        kl += pw * (pw / qw).ln();
    }
    Ok(if kl < DISTANCE_CLAMP { 0.0 } else { kl })
}

/// Per-partition loads. Imbalance is only defined when some load is
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    loads: Vec<f64>,
}

impl LoadVector {
    pub fn new(loads: Vec<f64>) -> Result<Self> {
        if loads.is_empty() {
            return Err(Error::EmptyInput("load vector"));
        }
        if loads.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidParameter {
                name: "loads",
                reason: "loads must be finite and non-negative".into(),
            });
        }
        Ok(LoadVector { loads })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        LoadVector::new(counts.iter().map(|&c| c as f64).collect())
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }
}

/// Percent imbalance `(max(L)/mean(L) - 1) · 100`: the share of run time
/// lost to the most loaded partition. Errors when all loads are zero.
pub fn percent_imbalance(loads: &LoadVector) -> Result<f64> {
    let max = loads.loads.iter().copied().fold(0.0f64, f64::max);
    let mean = loads.loads.iter().sum::<f64>() / loads.loads.len() as f64;
    if mean <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "loads",
            reason: "all loads are zero; imbalance undefined".into(),
        });
    }
    Ok((max / mean - 1.0) * 100.0)
}

/// Exact per-key counts of a stream: the test oracle every sampler is
/// judged against.
pub fn exact_frequencies(stream: &StreamBuffer) -> Estimate {
    let mut counts = std::collections::BTreeMap::new();
    for &key in &stream.keys {
        *counts.entry(key).or_insert(0.0) += 1.0;
    }
    Estimate::new(counts, stream.keys.len() as u64)
}

/// Exact counts filtered with the same top-K / threshold semantics the
/// samplers use.
pub fn ground_truth(stream: &StreamBuffer, mode: QueryMode) -> Estimate {
    exact_frequencies(stream).filter(mode)
}
