//! Drift-aware samplers: the metadata-backed Oracle baseline and the two
//! smoothing wrappers that renew their inner sampler so stale traffic
//! ages out of the reported estimate.

use std::sync::Arc;

use crate::dist::ProbDist;
use crate::drift::DriftSet;
use crate::error::Result;
use crate::metrics::hellinger;
use crate::samplers::{Estimate, InnerFactory, QueryMode, Sampler};

/// The exact expected distribution of a stream at position `i`:
/// inside a gradual drift the mixture `(1-p)·p1 + p·p2` with
/// `p = (i - start)/len`, at an abrupt drift and beyond any drift the
/// governing drift's `p2`.
pub fn oracle_distribution(ds: &DriftSet, i: u64) -> Result<ProbDist> {
    Ok(ds.governing(i)?.expected_dist())
}

/// A sampler with access to the stream's metadata: it tracks its position
/// and reports the true expected distribution there. The ranking baseline;
/// deployable only in simulation.
///
/// The position advances one step per recorded element. When several
/// instances split one stream (as in the imbalance harness) each instance
/// only sees its share, so on drifting streams their reported
/// distributions lag behind the stream position accordingly.
pub struct OracleSampler {
    drifts: Arc<DriftSet>,
    cursor: u64,
}

impl OracleSampler {
    /// `drifts` must be a validated set; queries walk its rules directly.
    pub fn new(drifts: Arc<DriftSet>) -> Self {
        OracleSampler { drifts, cursor: 0 }
    }

    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    /// The true distribution at the current position.
    pub fn distribution(&self) -> Result<ProbDist> {
        oracle_distribution(&self.drifts, self.cursor.max(1))
    }
}

impl Sampler for OracleSampler {
    fn record(&mut self, _key: crate::dist::Key) {
        if self.cursor < self.drifts.n() {
            self.cursor += 1;
        }
    }

    fn query(&self, _mode: QueryMode) -> Estimate {
        // Always the full true distribution; top-K and threshold
        // truncation do not apply to the baseline.
        let dist = self
            .distribution()
            .expect("oracle holds a validated drift set");
        Estimate::new(dist.iter().collect(), self.cursor)
    }

    fn counter_count(&self) -> usize {
        self.distribution().map(|d| d.support_len()).unwrap_or(0)
    }

    fn total_processed(&self) -> u64 {
        self.cursor
    }
}

/// Landmark-style renewal without the cold-start hole: a secondary
/// sampler warms up for `switch_threshold` records alongside the main one
/// before taking over. Only the main sampler is ever reported.
pub struct TemporalSmoothed {
    main: Box<dyn Sampler>,
    secondary: Option<Box<dyn Sampler>>,
    threshold: u64,
    switch_threshold: u64,
    total: u64,
    factory: InnerFactory,
}

impl TemporalSmoothed {
    pub fn new(mut factory: InnerFactory, threshold: u64, switch_threshold: u64) -> Result<Self> {
        if threshold == 0 {
            return Err(crate::error::Error::InvalidParameter {
                name: "threshold",
                reason: "must be at least 1".into(),
            });
        }
        if switch_threshold == 0 {
            return Err(crate::error::Error::InvalidParameter {
                name: "switch_threshold",
                reason: "must be at least 1".into(),
            });
        }
        factory.validate()?;
        let main = factory.spawn();
        Ok(TemporalSmoothed {
            main,
            secondary: None,
            threshold,
            switch_threshold,
            total: 0,
            factory,
        })
    }

    pub fn main_counter_count(&self) -> usize {
        self.main.counter_count()
    }

    pub fn secondary_counter_count(&self) -> usize {
        self.secondary.as_ref().map_or(0, |s| s.counter_count())
    }
}

impl Sampler for TemporalSmoothed {
    fn record(&mut self, key: crate::dist::Key) {
        self.total += 1;
        self.main.record(key);
        if let Some(secondary) = &mut self.secondary {
            secondary.record(key);
        }
        if self.secondary.is_none()
            && self.main.total_processed() == self.threshold + self.switch_threshold
        {
            self.secondary = Some(self.factory.spawn());
        } else if let Some(secondary) = &self.secondary {
            if secondary.total_processed() == self.switch_threshold {
                self.main = self.secondary.take().expect("checked above");
            }
        }
    }

    fn query(&self, mode: QueryMode) -> Estimate {
        self.main.query(mode)
    }

    fn counter_count(&self) -> usize {
        self.main_counter_count() + self.secondary_counter_count()
    }

    fn total_processed(&self) -> u64 {
        self.total
    }
}

/// Renewal gated by evidence: a secondary sampler is spawned every
/// `checkpoint_window` records; once it has seen `check_threshold`
/// records its report is compared to the main sampler's by Hellinger
/// distance, and the main sampler is replaced only when they disagree
/// beyond `error_threshold`.
pub struct CheckpointSmoothed {
    main: Box<dyn Sampler>,
    secondary: Option<Box<dyn Sampler>>,
    checkpoint_window: u64,
    check_threshold: u64,
    error_threshold: f64,
    checkpoint: u64,
    total: u64,
    factory: InnerFactory,
}

impl CheckpointSmoothed {
    pub fn new(
        mut factory: InnerFactory,
        checkpoint_window: u64,
        check_threshold: u64,
        error_threshold: f64,
    ) -> Result<Self> {
        if checkpoint_window == 0 || check_threshold == 0 {
            return Err(crate::error::Error::InvalidParameter {
                name: "checkpoint_window",
                reason: "checkpoint window and check threshold must be at least 1".into(),
            });
        }
        if !error_threshold.is_finite() || error_threshold <= 0.0 {
            return Err(crate::error::Error::InvalidParameter {
                name: "error_threshold",
                reason: format!("must be positive, got {error_threshold}"),
            });
        }
        factory.validate()?;
        let main = factory.spawn();
        Ok(CheckpointSmoothed {
            main,
            secondary: None,
            checkpoint_window,
            check_threshold,
            error_threshold,
            checkpoint: 0,
            total: 0,
            factory,
        })
    }

    pub fn main_counter_count(&self) -> usize {
        self.main.counter_count()
    }

    pub fn secondary_counter_count(&self) -> usize {
        self.secondary.as_ref().map_or(0, |s| s.counter_count())
    }

    fn report_distance(&self) -> f64 {
        let secondary = self.secondary.as_ref().expect("called with secondary");
        let expected = self.main.query(QueryMode::all()).relative_frequencies();
        let actual = secondary.query(QueryMode::all()).relative_frequencies();
        match (expected, actual) {
            (Some(expected), Some(actual)) => hellinger(&expected, &actual),
            (None, None) => 0.0,
            // One side has nothing to report: treat as maximal difference.
            _ => 1.0,
        }
    }
}

impl Sampler for CheckpointSmoothed {
    fn record(&mut self, key: crate::dist::Key) {
        self.total += 1;
        self.main.record(key);
        if let Some(secondary) = &mut self.secondary {
            secondary.record(key);
        }
        if self.secondary.is_none() && self.total > self.checkpoint + self.checkpoint_window {
            self.secondary = Some(self.factory.spawn());
        } else if let Some(secondary) = &self.secondary {
            if secondary.total_processed() > self.check_threshold {
                if self.report_distance() > self.error_threshold {
                    self.main = self.secondary.take().expect("checked above");
                } else {
                    self.secondary = None;
                }
                self.checkpoint = self.total;
            }
        }
    }

    fn query(&self, mode: QueryMode) -> Estimate {
        self.main.query(mode)
    }

    fn counter_count(&self) -> usize {
        self.main_counter_count() + self.secondary_counter_count()
    }

    fn total_processed(&self) -> u64 {
        self.total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Key;
    use crate::drift::Drift;
    use crate::samplers::SamplerSpec;

    fn point(k: u64) -> ProbDist {
        ProbDist::point_mass(Key(k))
    }

    fn exact_factory() -> InnerFactory {
        InnerFactory::new(SamplerSpec::ExactCounting, 1, None)
    }

    #[test]
    fn oracle_rules() {
        let ds = DriftSet::new(
            vec![
                Drift::abrupt(1, point(1), point(1)),
                Drift::gradual(5, 9, point(1), point(2)).unwrap(),
            ],
            12,
        );
        // At the gradual drift's start p = 0, so pure p1.
        assert_eq!(oracle_distribution(&ds, 5).unwrap(), point(1));
        // At its end p = 1, so pure p2.
        assert_eq!(oracle_distribution(&ds, 9).unwrap(), point(2));
        // A quarter in: 0.75·p1 + 0.25·p2.
        let quarter = oracle_distribution(&ds, 6).unwrap();
        assert!((quarter.weight(Key(1)) - 0.75).abs() < 1e-15);
        assert!((quarter.weight(Key(2)) - 0.25).abs() < 1e-15);
        // Before the gradual drift and after it: the governing p2.
        assert_eq!(oracle_distribution(&ds, 3).unwrap(), point(1));
        assert_eq!(oracle_distribution(&ds, 12).unwrap(), point(2));
    }

    #[test]
    fn tmp_promotion_trace() {
        // t = 2, st = 1: the secondary spawns once the main has seen
        // three records and takes over after one shared record.
        let mut tmp = TemporalSmoothed::new(exact_factory(), 2, 1).unwrap();
        for k in [1u64, 2, 3, 4] {
            tmp.record(Key(k));
        }
        let est = tmp.query(QueryMode::all());
        assert_eq!(est.counts().collect::<Vec<_>>(), vec![(Key(4), 1.0)]);
    }

    #[test]
    fn tmp_constant_stream_reports_point_mass() {
        let mut tmp = TemporalSmoothed::new(exact_factory(), 3, 2).unwrap();
        for _ in 0..100 {
            tmp.record(Key(7));
            let freq = tmp
                .query(QueryMode::all())
                .relative_frequencies()
                .expect("main sampler always has records");
            assert_eq!(freq, point(7));
        }
    }

    #[test]
    fn tmp_flushes_pre_drift_keys_within_bound() {
        // Abrupt point-mass drift at chi: from index chi + t + 2·st on,
        // the reported estimate contains no pre-drift key.
        for (t, st, chi) in [(5u64, 3u64, 11u64), (4, 4, 17), (1, 1, 2), (7, 2, 40)] {
            let mut tmp = TemporalSmoothed::new(exact_factory(), t, st).unwrap();
            let horizon = chi + t + 2 * st + 30;
            for i in 1..=horizon {
                let key = if i < chi { Key(1) } else { Key(2) };
                tmp.record(key);
                if i >= chi + t + 2 * st {
                    let est = tmp.query(QueryMode::all());
                    assert_eq!(
                        est.count_of(Key(1)),
                        0.0,
                        "stale key visible at index {i} (t={t}, st={st}, chi={chi})"
                    );
                }
            }
        }
    }

    #[test]
    fn tmp_memory_stays_within_phase_budget() {
        let (t, st) = (10u64, 4u64);
        let mut tmp = TemporalSmoothed::new(exact_factory(), t, st).unwrap();
        for i in 0..500u64 {
            tmp.record(Key(i % 17 + 1));
            let distinct = 17.min(i + 1);
            let f = |records: u64| records.min(distinct) as usize;
            assert!(tmp.main_counter_count() <= f(2 * st + t));
            assert!(tmp.secondary_counter_count() <= f(st));
        }
    }

    #[test]
    fn cps_constant_stream_never_replaces_main() {
        let mut cps = CheckpointSmoothed::new(exact_factory(), 4, 4, 0.2).unwrap();
        for _ in 0..200 {
            cps.record(Key(9));
        }
        // The main sampler has survived every checkpoint, so it still
        // counts the whole stream.
        assert_eq!(cps.query(QueryMode::all()).count_of(Key(9)), 200.0);
    }

    #[test]
    fn cps_replaces_main_after_abrupt_drift() {
        let mut cps = CheckpointSmoothed::new(exact_factory(), 4, 4, 0.2).unwrap();
        // Five records of the old key, then the distribution jumps.
        for _ in 0..5 {
            cps.record(Key(1));
        }
        for _ in 0..20 {
            cps.record(Key(2));
        }
        let est = cps.query(QueryMode::all());
        assert_eq!(est.count_of(Key(1)), 0.0, "main was not replaced");
        assert!(est.count_of(Key(2)) > 0.0);
    }

    #[test]
    fn cps_mixed_versus_pure_reports_expected_distance() {
        // The distance the checkpoint comparison sees for a two-thirds /
        // one-third main report against a pure secondary report.
        let mixed = ProbDist::new(
            [(Key(1), 2.0 / 3.0), (Key(2), 1.0 / 3.0)]
                .into_iter()
                .collect(),
        )
        .unwrap();
        assert!((hellinger(&mixed, &point(2)) - 0.6501).abs() < 1e-3);
    }

    #[test]
    fn cps_hellinger_trigger_matches_direct_evaluation() {
        // With cw = ct = 4 the secondary spawns at record 5 and is
        // compared at record 10. Drifting at record 6 makes the main
        // report {1: 5, 2: 5} against a pure secondary {2: 5}, whose
        // distance is the hand value 0.5412; thresholds on either side of
        // it must flip the replacement decision.
        let h = hellinger(
            &ProbDist::new([(Key(1), 0.5), (Key(2), 0.5)].into_iter().collect()).unwrap(),
            &point(2),
        );
        assert!((h - 0.5412).abs() < 1e-4);

        let mut replaced = CheckpointSmoothed::new(exact_factory(), 4, 4, h - 0.02).unwrap();
        let mut kept = CheckpointSmoothed::new(exact_factory(), 4, 4, h + 0.02).unwrap();
        for i in 1..=10u64 {
            let key = if i <= 5 { Key(1) } else { Key(2) };
            replaced.record(key);
            kept.record(key);
        }
        assert_eq!(replaced.query(QueryMode::all()).count_of(Key(1)), 0.0);
        assert_eq!(kept.query(QueryMode::all()).count_of(Key(1)), 5.0);
    }

    #[test]
    fn cps_unit_error_threshold_never_replaces() {
        // The Hellinger distance is capped at 1 and replacement needs a
        // strict exceedance, so an error threshold of 1 disables renewal;
        // reaching 1 would need fully disjoint reports, which the shared
        // recent window rules out.
        let mut cps = CheckpointSmoothed::new(exact_factory(), 4, 4, 1.0).unwrap();
        for i in 1..=60u64 {
            cps.record(if i <= 5 { Key(1) } else { Key(2) });
        }
        assert_eq!(cps.query(QueryMode::all()).count_of(Key(1)), 5.0);
        assert_eq!(cps.query(QueryMode::all()).total(), 60);
    }

    #[test]
    fn cps_is_stable_on_a_constant_concept() {
        // Seeded statistical check: with a generous error threshold and a
        // four-digit check threshold, sampling noise between the long-run
        // main report and a fresh secondary never triggers a replacement.
        let md = crate::stream::StreamMetadata::new(
            50_000,
            100,
            404,
            vec![crate::stream::DriftSpec::abrupt(
                1,
                crate::stream::DistSpec::Zipf {
                    exponent: 1.0,
                    perm_seed: None,
                },
                crate::stream::DistSpec::Zipf {
                    exponent: 1.0,
                    perm_seed: None,
                },
            )],
        );
        let stream = crate::generator::generate_stream(md).unwrap();
        let mut cps = CheckpointSmoothed::new(exact_factory(), 2_000, 1_000, 0.5).unwrap();
        for &key in &stream.keys {
            cps.record(key);
        }
        // An unreplaced main sampler has processed the entire stream.
        assert_eq!(cps.query(QueryMode::all()).total(), 50_000);
    }

    #[test]
    fn cps_memory_stays_within_budget() {
        let ct = 6u64;
        let mut cps = CheckpointSmoothed::new(exact_factory(), 5, ct, 0.3).unwrap();
        for i in 0..400u64 {
            cps.record(Key(i % 23 + 1));
            let distinct = 23.min(i + 1);
            let f = |records: u64| records.min(distinct) as usize;
            assert!(cps.main_counter_count() <= f(i + 1));
            assert!(cps.secondary_counter_count() <= f(ct));
        }
    }

    #[test]
    fn oracle_sampler_walks_the_stream() {
        let ds = Arc::new(DriftSet::new(
            vec![
                Drift::abrupt(1, point(1), point(1)),
                Drift::abrupt(4, point(1), point(2)),
            ],
            6,
        ));
        let mut oracle = OracleSampler::new(Arc::clone(&ds));
        for i in 1..=6u64 {
            oracle.record(Key(1));
            let freq = oracle
                .query(QueryMode::top_k(1).unwrap())
                .relative_frequencies()
                .unwrap();
            let expected = if i < 4 { point(1) } else { point(2) };
            assert_eq!(freq, expected, "index {i}");
        }
    }
}
