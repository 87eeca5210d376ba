//! Concepts: time-indexed distributions, each active on a contiguous
//! range of stream positions.

use crate::dist::ProbDist;
use crate::error::{Error, Result};

/// What a concept's probability function looks like over its range.
#[derive(Debug, Clone, PartialEq)]
pub enum ConceptPayload {
    /// The same distribution at every covered index.
    Constant(ProbDist),
    /// A transition from `p1` at the start of the range to `p2` at its end.
    Changing { p1: ProbDist, p2: ProbDist },
}

/// A distribution active on the inclusive index range `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Concept {
    pub start: u64,
    pub end: u64,
    pub payload: ConceptPayload,
}

impl Concept {
    pub fn constant(start: u64, end: u64, p: ProbDist) -> Result<Self> {
        if start == 0 || start > end {
            return Err(Error::InvalidConceptSet(format!(
                "constant concept range [{start}, {end}] is empty or zero-based"
            )));
        }
        Ok(Concept {
            start,
            end,
            payload: ConceptPayload::Constant(p),
        })
    }

    /// A changing concept needs a non-degenerate range to transition over.
    pub fn changing(start: u64, end: u64, p1: ProbDist, p2: ProbDist) -> Result<Self> {
        if start == 0 || end <= start {
            return Err(Error::InvalidConceptSet(format!(
                "changing concept range [{start}, {end}] must satisfy end > start >= 1"
            )));
        }
        Ok(Concept {
            start,
            end,
            payload: ConceptPayload::Changing { p1, p2 },
        })
    }

    /// The distribution the stream ends this concept with.
    pub fn terminal_dist(&self) -> &ProbDist {
        match &self.payload {
            ConceptPayload::Constant(p) => p,
            ConceptPayload::Changing { p2, .. } => p2,
        }
    }
}

/// An ordered cover of `[1, n]` by concepts: exactly one concept is active
/// at every stream position.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSet {
    concepts: Vec<Concept>,
    n: u64,
}

impl ConceptSet {
    pub fn new(concepts: Vec<Concept>, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConceptSet("stream length is zero".into()));
        }
        if concepts.is_empty() {
            return Err(Error::InvalidConceptSet("no concepts".into()));
        }
        let mut expected_start = 1;
        for (idx, c) in concepts.iter().enumerate() {
            if c.start != expected_start {
                return Err(Error::InvalidConceptSet(format!(
                    "concept {idx} starts at {} but position {expected_start} is uncovered",
                    c.start
                )));
            }
            if c.end < c.start {
                return Err(Error::InvalidConceptSet(format!(
                    "concept {idx} has end {} before start {}",
                    c.end, c.start
                )));
            }
            expected_start = c.end + 1;
        }
        if expected_start != n + 1 {
            return Err(Error::InvalidConceptSet(format!(
                "concepts cover up to {} but the stream has length {n}",
                expected_start - 1
            )));
        }
        Ok(ConceptSet { concepts, n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    /// The concept active at position `i`.
    pub fn active_at(&self, i: u64) -> Result<&Concept> {
        if i == 0 || i > self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            });
        }
        let idx = self.concepts.partition_point(|c| c.end < i);
        Ok(&self.concepts[idx])
    }

    /// True distribution of the stream at position `i`.
    ///
    /// A changing concept reports the expectation mixture
    /// `(1-q)·p1 + q·p2` with `q = (i - start) / (end - start)`, the
    /// expected value of the randomized choice the generator makes.
    pub fn true_distribution(&self, i: u64) -> Result<ProbDist> {
        let concept = self.active_at(i)?;
        Ok(match &concept.payload {
            ConceptPayload::Constant(p) => p.clone(),
            ConceptPayload::Changing { p1, p2 } => {
                let q = (i - concept.start) as f64 / (concept.end - concept.start) as f64;
                p1.mix(p2, q)
            }
        })
    }
}
