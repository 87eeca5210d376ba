//! Deterministic synthetic stream generation: Zipfian distribution
//! construction, drift-driven key drawing, and micro-burst injection.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{CumulativeTable, Key, ProbDist};
use crate::drift::DriftSet;
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::stream::{StreamBuffer, StreamMetadata};

/// Builds a Zipfian distribution over the universe `1..=num_keys`: rank
/// `r` carries weight `r^-exponent / Z`. Ranks are assigned to keys by a
/// seed-determined permutation; `None` keeps rank `r` on key `r`.
pub fn zipfian_dist(num_keys: u64, exponent: f64, perm_seed: Option<u64>) -> Result<ProbDist> {
    if num_keys == 0 {
        return Err(Error::InvalidParameter {
            name: "num_keys",
            reason: "zipfian distribution needs at least one key".into(),
        });
    }
    if !exponent.is_finite() || exponent <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "exponent",
            reason: format!("must be positive, got {exponent}"),
        });
    }
    let mut perm: Vec<u64> = (1..=num_keys).collect();
    if let Some(seed) = perm_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..perm.len()).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
    }
    let norm: f64 = (1..=num_keys).map(|j| (j as f64).powf(-exponent)).sum();
    let weights: BTreeMap<Key, f64> = perm
        .iter()
        .enumerate()
        .map(|(idx, &key)| {
            let rank = (idx + 1) as f64;
            (Key(key), rank.powf(-exponent) / norm)
        })
        .collect();
    ProbDist::new(weights)
}

/// The randomized interpolation between two distributions: given drift
/// progress `p` and a uniform variate `r`, picks `p1` while `r > p` and
/// `p2` otherwise. Its expectation is the linear mixture.
pub fn delta_choose<'a>(p: f64, p1: &'a ProbDist, p2: &'a ProbDist, r: f64) -> &'a ProbDist {
    if r > p {
        p1
    } else {
        p2
    }
}

enum SegmentKind {
    Gradual {
        p1: usize,
        p2: usize,
        start: u64,
        len: u64,
    },
    Constant {
        table: usize,
    },
}

struct Segment {
    start: u64,
    end: u64,
    kind: SegmentKind,
}

/// Draws the raw key sequence for a validated drift set. Positions inside
/// a gradual drift draw a fresh uniform `r` per item to pick between the
/// endpoint distributions; every position then spends exactly one uniform
/// variate on the key itself.
pub fn generate_keys(ds: &DriftSet, seed: u64) -> Result<Vec<Key>> {
    ds.validate().into_result()?;
    let n = ds.n();

    let mut tables: Vec<CumulativeTable> = Vec::new();
    let mut segments: Vec<Segment> = Vec::new();
    let drifts = ds.drifts();
    for (idx, d) in drifts.iter().enumerate() {
        if d.is_abrupt() {
            tables.push(CumulativeTable::new(d.p2()));
            segments.push(Segment {
                start: d.start(),
                end: d.end(),
                kind: SegmentKind::Constant {
                    table: tables.len() - 1,
                },
            });
        } else {
            tables.push(CumulativeTable::new(d.p1()));
            tables.push(CumulativeTable::new(d.p2()));
            segments.push(Segment {
                start: d.start(),
                end: d.end(),
                kind: SegmentKind::Gradual {
                    p1: tables.len() - 2,
                    p2: tables.len() - 1,
                    start: d.start(),
                    len: d.len(),
                },
            });
        }
        let tail_end = match drifts.get(idx + 1) {
            Some(next) => next.start() - 1,
            None => n,
        };
        if tail_end > d.end() {
            let p2_table = match segments.last().unwrap().kind {
                SegmentKind::Gradual { p2, .. } => p2,
                SegmentKind::Constant { table } => table,
            };
            segments.push(Segment {
                start: d.end() + 1,
                end: tail_end,
                kind: SegmentKind::Constant { table: p2_table },
            });
        }
    }

    // Exactly one generation rule per position: the segments must
    // partition [1, n] with no gaps or overlaps.
    let mut expected = 1;
    for seg in &segments {
        assert_eq!(seg.start, expected, "generation rules left a gap");
        assert!(seg.end >= seg.start);
        expected = seg.end + 1;
    }
    assert_eq!(expected, n + 1, "generation rules do not cover the stream");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keys = Vec::with_capacity(n as usize);
    for seg in &segments {
        match seg.kind {
            SegmentKind::Constant { table } => {
                let table = &tables[table];
                for _ in seg.start..=seg.end {
                    let u: f64 = rng.gen();
                    keys.push(table.sample(u));
                }
            }
            SegmentKind::Gradual { p1, p2, start, len } => {
                for i in seg.start..=seg.end {
                    let r: f64 = rng.gen();
                    let p = (i - start) as f64 / len as f64;
                    let table = if r > p { &tables[p1] } else { &tables[p2] };
                    let u: f64 = rng.gen();
                    keys.push(table.sample(u));
                }
            }
        }
    }
    Ok(keys)
}

/// Generates the stream a metadata record describes. Identical metadata
/// yields a bit-identical stream.
pub fn generate_stream(metadata: StreamMetadata) -> Result<StreamBuffer> {
    let ds = metadata.drift_set()?;
    let keys = generate_keys(&ds, derive_seed(metadata.seed, "generate"))?;
    Ok(StreamBuffer { keys, metadata })
}

/// Micro-burst configuration.
///
/// `bsp` is the probability that a burst starts before a micro-batch
/// (while none is active), `kbp` the probability that each key of the
/// universe is held back during a burst, and the burst length is drawn
/// uniformly from `bl_min..=bl_max` micro-batches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstConfig {
    pub bsp: f64,
    pub kbp: f64,
    pub bl_min: u64,
    pub bl_max: u64,
}

impl BurstConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.bsp) {
            return Err(Error::InvalidParameter {
                name: "bsp",
                reason: format!("must be in [0, 1], got {}", self.bsp),
            });
        }
        if !(0.0..=1.0).contains(&self.kbp) {
            return Err(Error::InvalidParameter {
                name: "kbp",
                reason: format!("must be in [0, 1], got {}", self.kbp),
            });
        }
        if self.bl_min == 0 || self.bl_min > self.bl_max {
            return Err(Error::InvalidParameter {
                name: "bl_min",
                reason: format!(
                    "need 1 <= bl_min <= bl_max, got [{}, {}]",
                    self.bl_min, self.bl_max
                ),
            });
        }
        Ok(())
    }

    /// Occasional short bursts holding back few keys.
    pub fn light() -> Self {
        BurstConfig {
            bsp: 0.05,
            kbp: 0.01,
            bl_min: 1,
            bl_max: 2,
        }
    }

    /// Frequent multi-batch bursts holding back a noticeable key share.
    pub fn heavy() -> Self {
        BurstConfig {
            bsp: 0.3,
            kbp: 0.05,
            bl_min: 2,
            bl_max: 4,
        }
    }
}

/// One recorded burst: which keys were held back and how many occurrences
/// of each were released when it ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstEvent {
    pub start_batch: u64,
    pub length_batches: u64,
    pub faulty_keys: BTreeSet<Key>,
    pub held_counts: BTreeMap<Key, u64>,
}

/// Replays a stream through a faulty-router simulation.
///
/// Micro-batches are counted in delivered items. Before each batch, an
/// idle router starts a burst with probability `bsp`; during a burst,
/// loaded items whose key is in the faulty-key map are withheld instead
/// of delivered. When the burst ends (or the source runs dry) all held
/// occurrences are released at once, grouped by ascending key. The output
/// is a permutation of the input: no key is ever added or dropped.
pub fn inject_bursts(
    src: &StreamBuffer,
    cfg: &BurstConfig,
    batch_size: u64,
    seed: u64,
) -> Result<StreamBuffer> {
    cfg.validate()?;
    if batch_size == 0 {
        return Err(Error::InvalidParameter {
            name: "batch_size",
            reason: "must be at least 1".into(),
        });
    }

    struct ActiveBurst {
        start_batch: u64,
        length: u64,
        remaining: u64,
        faulty: BTreeSet<Key>,
        held: BTreeMap<Key, u64>,
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(src.keys.len());
    let mut events = Vec::new();
    let mut source = src.keys.iter().copied().peekable();
    let mut active: Option<ActiveBurst> = None;
    let mut batch_idx: u64 = 0;

    while source.peek().is_some() || active.is_some() {
        batch_idx += 1;
        if active.is_none() && source.peek().is_some() && rng.gen::<f64>() < cfg.bsp {
            let length = rng.gen_range(cfg.bl_min..=cfg.bl_max);
            let mut faulty = BTreeSet::new();
            for key in src.metadata.universe() {
                if rng.gen::<f64>() < cfg.kbp {
                    faulty.insert(key);
                }
            }
            active = Some(ActiveBurst {
                start_batch: batch_idx,
                length,
                remaining: length,
                faulty,
                held: BTreeMap::new(),
            });
        }

        let mut delivered = 0;
        while delivered < batch_size {
            let Some(key) = source.next() else { break };
            if let Some(burst) = &mut active {
                if burst.faulty.contains(&key) {
                    *burst.held.entry(key).or_insert(0) += 1;
                    continue;
                }
            }
            out.push(key);
            delivered += 1;
        }

        let exhausted = source.peek().is_none();
        if let Some(mut burst) = active.take() {
            burst.remaining -= 1;
            if burst.remaining == 0 || exhausted {
                for (&key, &count) in &burst.held {
                    out.extend(std::iter::repeat_n(key, count as usize));
                }
                events.push(BurstEvent {
                    start_batch: burst.start_batch,
                    length_batches: burst.length,
                    faulty_keys: burst.faulty,
                    held_counts: burst.held,
                });
            } else {
                active = Some(burst);
            }
        }
    }

    let mut metadata = src.metadata.clone();
    match &mut metadata.burst_log {
        Some(log) => log.extend(events),
        None => metadata.burst_log = Some(events),
    }
    Ok(StreamBuffer {
        keys: out,
        metadata,
    })
}
