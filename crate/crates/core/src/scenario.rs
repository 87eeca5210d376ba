//! Random but always-valid drift scenarios, used to diversify optimizer
//! training streams and to drive property tests.

use rand::Rng;

use crate::dist::{Key, ProbDist};
use crate::drift::{Drift, DriftSet};

/// A random distribution over a subset of the universe.
pub fn random_prob_dist<R: Rng>(rng: &mut R, universe: &[Key]) -> ProbDist {
    assert!(!universe.is_empty());
    let support = rng.gen_range(1..=universe.len());
    let mut keys = universe.to_vec();
    for i in (1..keys.len()).rev() {
        let j = rng.gen_range(0..=i);
        keys.swap(i, j);
    }
    keys.truncate(support);
    let weights = keys
        .into_iter()
        .map(|k| (k, rng.gen_range(0.05..1.0)))
        .collect();
    ProbDist::normalized(weights).expect("positive weights normalize")
}

/// Builds a valid drift set: an initial drift at position 1, strictly
/// separated drifts, and chained boundary distributions so the continuity
/// rule holds exactly.
pub fn random_drift_set<R: Rng>(rng: &mut R, n: u64, max_drifts: usize, num_keys: u64) -> DriftSet {
    assert!(n >= 1 && max_drifts >= 1 && num_keys >= 1);
    let universe: Vec<Key> = (1..=num_keys).map(Key).collect();
    let target = rng.gen_range(1..=max_drifts);
    let mut current = random_prob_dist(rng, &universe);
    let mut drifts = Vec::new();
    let mut cursor = 1u64;
    for idx in 0..target {
        if cursor > n {
            break;
        }
        let start = if idx == 0 {
            1
        } else {
            rng.gen_range(cursor..=n)
        };
        let next = random_prob_dist(rng, &universe);
        if start < n && rng.gen_bool(0.6) {
            let end = rng.gen_range(start + 1..=n);
            drifts.push(Drift::gradual(start, end, current, next.clone()).unwrap());
            cursor = end + 1;
        } else {
            drifts.push(Drift::abrupt(start, current, next.clone()));
            cursor = start + 1;
        }
        current = next;
    }
    DriftSet::new(drifts, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_sets_always_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(1..1000);
            let ds = random_drift_set(&mut rng, n, 8, 20);
            let report = ds.validate();
            assert!(report.is_ok(), "violations: {:?}", report.violations);
        }
    }
}
