//! Generator-side drift records and their equivalence with concepts.
//!
//! A drift is `(len, mid, p1, p2)`: a transition of length `len` stream
//! positions centered on `mid`, from distribution `p1` to `p2`. `len = 0`
//! encodes an abrupt change, `len > 0` a gradual one. The midpoint is a
//! half-integer exactly when `len` is odd, so the derived start and end
//! positions are always integers; all arithmetic here runs on the doubled
//! midpoint to stay exact.

use crate::concept::{Concept, ConceptPayload, ConceptSet};
use crate::dist::ProbDist;
use crate::error::{Error, Result};

/// One distribution transition. Construct with [`Drift::abrupt`] or
/// [`Drift::gradual`] for guaranteed-consistent parity, or [`Drift::raw`]
/// to build records that may violate the rules (for validation testing).
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    len: u64,
    mid_x2: u64,
    p1: ProbDist,
    p2: ProbDist,
}

impl Drift {
    /// An abrupt drift at position `at`: before it the stream follows
    /// `p1` (by way of the preceding drift), from `at` on it follows `p2`.
    pub fn abrupt(at: u64, p1: ProbDist, p2: ProbDist) -> Self {
        Drift {
            len: 0,
            mid_x2: 2 * at,
            p1,
            p2,
        }
    }

    /// A gradual drift transitioning from `p1` at `start` to `p2` at `end`.
    pub fn gradual(start: u64, end: u64, p1: ProbDist, p2: ProbDist) -> Result<Self> {
        if end <= start {
            return Err(Error::InvalidParameter {
                name: "end",
                reason: format!("gradual drift needs end > start, got [{start}, {end}]"),
            });
        }
        Ok(Drift {
            len: end - start,
            mid_x2: end + start,
            p1,
            p2,
        })
    }

    /// Unchecked construction from length and doubled midpoint.
    pub fn raw(len: u64, mid_x2: u64, p1: ProbDist, p2: ProbDist) -> Self {
        Drift {
            len,
            mid_x2,
            p1,
            p2,
        }
    }

    /// Transition length in stream positions; zero for abrupt drifts.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u64 {
        self.len
    }

    /// Twice the midpoint; integer even for integer midpoints.
    pub fn mid_x2(&self) -> u64 {
        self.mid_x2
    }

    pub fn p1(&self) -> &ProbDist {
        &self.p1
    }

    pub fn p2(&self) -> &ProbDist {
        &self.p2
    }

    pub fn is_abrupt(&self) -> bool {
        self.len == 0
    }

    /// Midpoint parity matches length parity, making start/end integers.
    pub fn parity_ok(&self) -> bool {
        self.len % 2 == self.mid_x2 % 2
    }

    /// Twice the start position (may be negative for broken records).
    fn start_x2(&self) -> i128 {
        self.mid_x2 as i128 - self.len as i128
    }

    /// Twice the end position.
    fn end_x2(&self) -> i128 {
        self.mid_x2 as i128 + self.len as i128
    }

    /// First stream position governed by this drift. Requires valid parity.
    pub fn start(&self) -> u64 {
        debug_assert!(self.parity_ok() && self.start_x2() >= 2);
        (self.start_x2() / 2) as u64
    }

    /// Last stream position of the transition. Requires valid parity.
    pub fn end(&self) -> u64 {
        debug_assert!(self.parity_ok());
        (self.end_x2() / 2) as u64
    }
}

/// A single broken drift-set rule. Indices refer to the set's
/// mid-point-sorted drift order, zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    /// Odd length with integer midpoint, or even length with half-integer
    /// midpoint.
    Parity {
        drift: usize,
    },
    StartBeforeOne {
        drift: usize,
    },
    EndBeyondStream {
        drift: usize,
    },
    Overlap {
        first: usize,
        second: usize,
    },
    MissingInitialDrift,
    /// Consecutive drifts whose boundary distributions do not agree.
    Continuity {
        first: usize,
        second: usize,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Empty => write!(f, "drift list is empty"),
            Violation::Parity { drift } => {
                write!(
                    f,
                    "drift {drift}: midpoint parity does not match length parity"
                )
            }
            Violation::StartBeforeOne { drift } => {
                write!(f, "drift {drift}: starts before position 1")
            }
            Violation::EndBeyondStream { drift } => {
                write!(f, "drift {drift}: ends beyond the stream length")
            }
            Violation::Overlap { first, second } => {
                write!(f, "drifts {first} and {second} overlap")
            }
            Violation::MissingInitialDrift => {
                write!(f, "no drift starts at position 1")
            }
            Violation::Continuity { first, second } => write!(
                f,
                "drift {first} ends with a different distribution than drift {second} starts with"
            ),
        }
    }
}

/// Result of [`DriftSet::validate`]: violations are data, not faults.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidDriftSet(self.violations))
        }
    }
}

/// Which generation rule governs a stream position.
#[derive(Debug, Clone, Copy)]
pub enum Governing<'a> {
    /// Inside a gradual drift, `progress = (i - start) / len`.
    Gradual { drift: &'a Drift, progress: f64 },
    /// Exactly at an abrupt drift's position.
    Abrupt(&'a Drift),
    /// Past the end of the latest drift; its `p2` rules.
    After(&'a Drift),
}

impl<'a> Governing<'a> {
    /// The distribution the generator draws from at this position.
    pub fn expected_dist(&self) -> ProbDist {
        match self {
            Governing::Gradual { drift, progress } => drift.p1().mix(drift.p2(), *progress),
            Governing::Abrupt(d) | Governing::After(d) => d.p2().clone(),
        }
    }
}

/// An ordered collection of drifts describing a stream of length `n`.
/// Drifts are kept sorted by midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSet {
    drifts: Vec<Drift>,
    n: u64,
}

impl DriftSet {
    pub fn new(mut drifts: Vec<Drift>, n: u64) -> Self {
        drifts.sort_by_key(|d| d.mid_x2);
        DriftSet { drifts, n }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn drifts(&self) -> &[Drift] {
        &self.drifts
    }

    /// Checks every drift-set rule and reports each violation with the
    /// rule and the offending drift indices.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.drifts.is_empty() {
            violations.push(Violation::Empty);
            return ValidationReport { violations };
        }
        for (idx, d) in self.drifts.iter().enumerate() {
            if !d.parity_ok() {
                violations.push(Violation::Parity { drift: idx });
            }
            if d.start_x2() < 2 {
                violations.push(Violation::StartBeforeOne { drift: idx });
            }
            if d.end_x2() > 2 * self.n as i128 {
                violations.push(Violation::EndBeyondStream { drift: idx });
            }
        }
        for i in 0..self.drifts.len() {
            for j in i + 1..self.drifts.len() {
                let (a, b) = (&self.drifts[i], &self.drifts[j]);
                if a.end_x2() >= b.start_x2() && b.end_x2() >= a.start_x2() {
                    violations.push(Violation::Overlap {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        if !self.drifts.iter().any(|d| d.start_x2() == 2) {
            violations.push(Violation::MissingInitialDrift);
        }
        for idx in 1..self.drifts.len() {
            let prev = &self.drifts[idx - 1];
            let next = &self.drifts[idx];
            // Exact equality: distributions built from a shared spec are
            // bit-identical, so no tolerance is needed here.
            if prev.p2 != next.p1 {
                violations.push(Violation::Continuity {
                    first: idx - 1,
                    second: idx,
                });
            }
        }
        ValidationReport { violations }
    }

    /// Finds the unique generation rule covering position `i`.
    ///
    /// Callers are expected to hold a validated set; on sets where no rule
    /// matches, this surfaces the validation failure.
    pub fn governing(&self, i: u64) -> Result<Governing<'_>> {
        if i == 0 || i > self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            });
        }
        let i_x2 = 2 * i as i128;
        // Last drift starting at or before i; sorted midpoints imply
        // sorted starts for non-overlapping drifts.
        let idx = self.drifts.partition_point(|d| d.start_x2() <= i_x2);
        if idx == 0 {
            return Err(Error::InvalidDriftSet(vec![Violation::MissingInitialDrift]));
        }
        let d = &self.drifts[idx - 1];
        if i_x2 <= d.end_x2() {
            if d.is_abrupt() {
                Ok(Governing::Abrupt(d))
            } else {
                let progress = (i - d.start()) as f64 / d.len() as f64;
                Ok(Governing::Gradual { drift: d, progress })
            }
        } else {
            Ok(Governing::After(d))
        }
    }
}

/// Builds the drift set equivalent to a concept set: a changing concept
/// on `[s, e]` becomes the gradual drift `(e - s, (e + s) / 2, p1, p2)`;
/// a constant concept becomes an abrupt drift at its start. The abrupt
/// drift's `p1` slot is irrelevant to generation and is filled with the
/// predecessor's terminal distribution so the result satisfies the
/// boundary-continuity rule.
pub fn concepts_to_drifts(cs: &ConceptSet) -> DriftSet {
    let mut drifts = Vec::with_capacity(cs.concepts().len());
    let mut prev_terminal: Option<&ProbDist> = None;
    for concept in cs.concepts() {
        let drift = match &concept.payload {
            ConceptPayload::Changing { p1, p2 } => {
                Drift::gradual(concept.start, concept.end, p1.clone(), p2.clone())
                    .expect("changing concept has end > start")
            }
            ConceptPayload::Constant(p) => {
                let px = prev_terminal.unwrap_or(p).clone();
                Drift::abrupt(concept.start, px, p.clone())
            }
        };
        prev_terminal = Some(concept.terminal_dist());
        drifts.push(drift);
    }
    DriftSet::new(drifts, cs.n())
}

/// Builds the concept set equivalent to a drift set: each gradual drift
/// becomes a changing concept on `[start, end]`, each abrupt drift a
/// constant concept, and any gap up to the next drift (or the stream end)
/// is covered by a constant concept holding the drift's `p2`.
pub fn drifts_to_concepts(ds: &DriftSet) -> Result<ConceptSet> {
    ds.validate().into_result()?;
    let drifts = ds.drifts();
    let mut concepts = Vec::new();
    for (idx, d) in drifts.iter().enumerate() {
        let end_d = match drifts.get(idx + 1) {
            Some(next) => next.start() - 1,
            None => ds.n(),
        };
        if d.is_abrupt() {
            concepts.push(Concept::constant(d.start(), end_d, d.p2().clone())?);
        } else {
            concepts.push(Concept::changing(
                d.start(),
                d.end(),
                d.p1().clone(),
                d.p2().clone(),
            )?);
            if end_d > d.end() {
                concepts.push(Concept::constant(d.end() + 1, end_d, d.p2().clone())?);
            }
        }
    }
    ConceptSet::new(concepts, ds.n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Key;

    fn point(k: u64) -> ProbDist {
        ProbDist::point_mass(Key(k))
    }

    #[test]
    fn minimal_valid_set_passes() {
        let ds = DriftSet::new(vec![Drift::abrupt(1, point(9), point(1))], 10);
        assert!(ds.validate().is_ok());
    }

    #[test]
    fn continuity_violation_is_reported() {
        // Drift 0 ends with distribution A, drift 1 starts with B != A.
        let a = point(1);
        let b = point(2);
        let ds = DriftSet::new(
            vec![
                Drift::abrupt(1, point(7), a),
                Drift::gradual(3, 7, b, point(3)).unwrap(),
            ],
            10,
        );
        let report = ds.validate();
        assert!(report.violations.contains(&Violation::Continuity {
            first: 0,
            second: 1
        }));
    }

    #[test]
    fn parity_violation_is_reported() {
        // len = 3 is odd, so an integer midpoint of 4 breaks parity.
        let ds = DriftSet::new(vec![Drift::raw(3, 8, point(1), point(2))], 10);
        let report = ds.validate();
        assert!(report.violations.contains(&Violation::Parity { drift: 0 }));
    }

    #[test]
    fn overlap_and_bounds_violations() {
        let ds = DriftSet::new(
            vec![
                Drift::gradual(1, 6, point(1), point(2)).unwrap(),
                Drift::gradual(4, 9, point(2), point(3)).unwrap(),
            ],
            8,
        );
        let report = ds.validate();
        assert!(report.violations.contains(&Violation::Overlap {
            first: 0,
            second: 1
        }));
        assert!(report
            .violations
            .contains(&Violation::EndBeyondStream { drift: 1 }));
    }

    #[test]
    fn missing_initial_drift_is_reported() {
        let ds = DriftSet::new(vec![Drift::abrupt(3, point(1), point(2))], 10);
        let report = ds.validate();
        assert!(report.violations.contains(&Violation::MissingInitialDrift));
    }

    #[test]
    fn empty_set_is_a_violation_not_a_fault() {
        let ds = DriftSet::new(vec![], 10);
        assert_eq!(ds.validate().violations, vec![Violation::Empty]);
    }

    #[test]
    fn abrupt_drift_to_concepts() {
        let ds = DriftSet::new(vec![Drift::abrupt(1, point(9), point(5))], 10);
        let cs = drifts_to_concepts(&ds).unwrap();
        assert_eq!(cs.concepts().len(), 1);
        let c = &cs.concepts()[0];
        assert_eq!((c.start, c.end), (1, 10));
        assert_eq!(c.payload, ConceptPayload::Constant(point(5)));
    }

    #[test]
    fn gradual_drift_with_tail_to_concepts() {
        // len = 4, mid = 3 covers [1, 5]; the rest of the stream keeps p2.
        let ds = DriftSet::new(vec![Drift::raw(4, 6, point(1), point(2))], 10);
        let cs = drifts_to_concepts(&ds).unwrap();
        assert_eq!(cs.concepts().len(), 2);
        assert_eq!((cs.concepts()[0].start, cs.concepts()[0].end), (1, 5));
        assert!(matches!(
            cs.concepts()[0].payload,
            ConceptPayload::Changing { .. }
        ));
        assert_eq!((cs.concepts()[1].start, cs.concepts()[1].end), (6, 10));
        assert_eq!(cs.concepts()[1].payload, ConceptPayload::Constant(point(2)));
    }

    #[test]
    fn constant_concept_to_abrupt_drift() {
        let cs = ConceptSet::new(vec![Concept::constant(1, 10, point(5)).unwrap()], 10).unwrap();
        let ds = concepts_to_drifts(&cs);
        assert_eq!(ds.drifts().len(), 1);
        let d = &ds.drifts()[0];
        assert!(d.is_abrupt());
        assert_eq!(d.mid_x2(), 2);
        assert_eq!(d.p2(), &point(5));
    }

    #[test]
    fn changing_concept_to_gradual_drift() {
        let cs = ConceptSet::new(
            vec![
                Concept::constant(1, 2, point(1)).unwrap(),
                Concept::changing(3, 7, point(1), point(2)).unwrap(),
            ],
            7,
        )
        .unwrap();
        let ds = concepts_to_drifts(&cs);
        assert_eq!(ds.drifts().len(), 2);
        let d = &ds.drifts()[1];
        assert_eq!(d.len(), 4);
        assert_eq!(d.mid_x2(), 10);
        assert_eq!(d.p1(), &point(1));
        assert_eq!(d.p2(), &point(2));
        assert!(ds.validate().is_ok());
    }

    #[test]
    fn governing_rule_is_exclusive_and_total() {
        let ds = DriftSet::new(
            vec![
                Drift::abrupt(1, point(1), point(1)),
                Drift::gradual(4, 8, point(1), point(2)).unwrap(),
                Drift::abrupt(10, point(2), point(3)),
            ],
            12,
        );
        assert!(ds.validate().is_ok());
        for i in 1..=12 {
            let g = ds.governing(i).unwrap();
            match i {
                1 => assert!(matches!(g, Governing::Abrupt(_))),
                2 | 3 => assert!(matches!(g, Governing::After(_))),
                4..=8 => assert!(matches!(g, Governing::Gradual { .. })),
                9 => assert!(matches!(g, Governing::After(_))),
                10 => assert!(matches!(g, Governing::Abrupt(_))),
                _ => assert!(matches!(g, Governing::After(_))),
            }
        }
        assert!(ds.governing(0).is_err());
        assert!(ds.governing(13).is_err());
    }
}
