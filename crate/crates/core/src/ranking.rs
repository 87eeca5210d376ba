//! The two benchmark harnesses: distance-to-oracle ranking and a
//! simulated two-stage shuffle ranked by partition load imbalance.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adaptive::oracle_distribution;
use crate::dist::Key;
use crate::error::{Error, Result};
use crate::metrics::{hellinger, percent_imbalance, LoadVector};
use crate::samplers::{Estimate, QueryMode, Sampler, SamplerSpec};
use crate::seed::{derive_seed, fnv1a64};
use crate::stream::StreamBuffer;

/// Routes a key to one of `m` partitions: FNV-1a over the key's 8-byte
/// little-endian encoding, modulo `m`. Stable across runs and platforms.
pub fn hash_partition(key: Key, m: u64) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: "cannot partition into zero partitions".into(),
        });
    }
    Ok(fnv1a64(&key.0.to_le_bytes()) % m)
}

/// A shuffle routing: explicit targets for the heavy keys, hash routing
/// for everything else.
#[derive(Debug, Clone)]
pub struct Partitioning {
    explicit: HashMap<Key, u64>,
    num_partitions: u64,
}

impl Partitioning {
    /// Pure hash routing.
    pub fn hash_only(num_partitions: u64) -> Result<Self> {
        if num_partitions == 0 {
            return Err(Error::InvalidParameter {
                name: "num_partitions",
                reason: "need at least one partition".into(),
            });
        }
        Ok(Partitioning {
            explicit: HashMap::new(),
            num_partitions,
        })
    }

    pub fn partition_of(&self, key: Key) -> u64 {
        match self.explicit.get(&key) {
            Some(&p) => p,
            None => fnv1a64(&key.0.to_le_bytes()) % self.num_partitions,
        }
    }

    pub fn explicit_len(&self) -> usize {
        self.explicit.len()
    }

    pub fn num_partitions(&self) -> u64 {
        self.num_partitions
    }
}

/// Greedy longest-processing-time assignment of the reported heavy keys.
///
/// Keys are taken in descending estimated frequency (relative to all
/// processed elements, ties toward the smaller key) and each goes to the
/// currently least-loaded partition. Every partition starts with an equal
/// share of the unreported tail mass; unlisted keys fall back to hashing.
pub fn build_partitioning(aggregate: &Estimate, m: u64) -> Result<Partitioning> {
    let mut partitioning = Partitioning::hash_only(m)?;
    if aggregate.is_empty() || aggregate.total() == 0 {
        return Ok(partitioning);
    }
    let total = aggregate.total() as f64;
    let mut ranked: Vec<(Key, f64)> = aggregate.counts().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let reported: f64 = ranked.iter().map(|(_, c)| c / total).sum();
    let residual = ((1.0 - reported) / m as f64).max(0.0);
    let mut loads = vec![residual; m as usize];
    for (key, count) in ranked {
        let target = loads
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .map(|(idx, _)| idx)
            .expect("at least one partition");
        loads[target] += count / total;
        partitioning.explicit.insert(key, target as u64);
    }
    Ok(partitioning)
}

/// When to install a freshly built partitioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum DeciderSpec {
    /// Repartition after every micro-batch.
    Always,
    /// Keep the initial routing for the whole run.
    Never,
    /// Repartition when the projected imbalance of the current routing
    /// under the aggregated estimate exceeds `theta` percent.
    ImbalanceThreshold { theta: f64 },
}

impl Default for DeciderSpec {
    fn default() -> Self {
        DeciderSpec::ImbalanceThreshold { theta: 10.0 }
    }
}

impl DeciderSpec {
    fn fires(&self, aggregate: &Estimate, current: &Partitioning) -> bool {
        match self {
            DeciderSpec::Always => true,
            DeciderSpec::Never => false,
            DeciderSpec::ImbalanceThreshold { theta } => {
                let mut loads = vec![0.0; current.num_partitions() as usize];
                for (key, count) in aggregate.counts() {
                    loads[current.partition_of(key) as usize] += count;
                }
                match LoadVector::new(loads).and_then(|l| percent_imbalance(&l)) {
                    Ok(imbalance) => imbalance > *theta,
                    Err(_) => false,
                }
            }
        }
    }
}

impl std::fmt::Display for DeciderSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeciderSpec::Always => write!(f, "always"),
            DeciderSpec::Never => write!(f, "never"),
            DeciderSpec::ImbalanceThreshold { theta } => {
                write!(f, "imbalance-threshold[theta={theta}]")
            }
        }
    }
}

/// Identity of one benchmark run. Imbalance runs are rank-comparable only
/// when every field except the sampler spec matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFingerprint {
    pub stream_id: String,
    pub num_partitions: Option<u64>,
    pub decider_spec: Option<String>,
    pub repartitioner_spec: Option<String>,
    pub batch_size: u64,
    pub sampler_spec: String,
    pub seed: u64,
}

impl RunFingerprint {
    pub fn comparable_with(&self, other: &RunFingerprint) -> bool {
        self.stream_id == other.stream_id
            && self.num_partitions == other.num_partitions
            && self.decider_spec == other.decider_spec
            && self.repartitioner_spec == other.repartitioner_spec
            && self.batch_size == other.batch_size
            && self.seed == other.seed
    }

    /// Hash of the sampler-independent fields, printed into outputs.
    pub fn shared_hex(&self) -> String {
        let shared = format!(
            "{}|{:?}|{:?}|{:?}|{}|{}",
            self.stream_id,
            self.num_partitions,
            self.decider_spec,
            self.repartitioner_spec,
            self.batch_size,
            self.seed
        );
        format!("{:016x}", fnv1a64(shared.as_bytes()))
    }
}

/// Stable identifier of a stream: a hash of its canonical metadata JSON.
pub fn stream_id(stream: &StreamBuffer) -> String {
    let mut metadata = stream.metadata.clone();
    metadata.fingerprint = None;
    let json = serde_json::to_string(&metadata).expect("metadata serializes");
    format!("{:016x}", fnv1a64(json.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Hellinger,
    Counters,
    Imbalance,
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricKind::Hellinger => write!(f, "hellinger"),
            MetricKind::Counters => write!(f, "counters"),
            MetricKind::Imbalance => write!(f, "imbalance"),
        }
    }
}

/// One measurement: `(batch, algorithm, metric) -> value`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub batch: u64,
    pub algorithm: String,
    pub metric: MetricKind,
    pub value: f64,
}

/// Time spent inside `record` for one algorithm during one micro-batch.
/// Wall-clock readings are hardware-bound, so they are kept out of the
/// CSV and the benchmark outputs stay byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordTiming {
    pub algorithm: String,
    pub batch: u64,
    pub nanos: u64,
}

/// Per-micro-batch metric rows for one or more algorithms measured under
/// identical run conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSeries {
    pub fingerprints: Vec<RunFingerprint>,
    pub rows: Vec<MetricRow>,
    pub timings: Vec<RecordTiming>,
}

impl BenchmarkSeries {
    pub fn values(&self, algorithm: &str, metric: MetricKind) -> Vec<(u64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.algorithm == algorithm && r.metric == metric)
            .map(|r| (r.batch, r.value))
            .collect()
    }

    pub fn mean(&self, algorithm: &str, metric: MetricKind) -> Option<f64> {
        let values = self.values(algorithm, metric);
        if values.is_empty() {
            return None;
        }
        Some(values.iter().map(|(_, v)| v).sum::<f64>() / values.len() as f64)
    }

    pub fn max(&self, algorithm: &str, metric: MetricKind) -> Option<f64> {
        self.values(algorithm, metric)
            .into_iter()
            .map(|(_, v)| v)
            .fold(None, |acc, v| Some(acc.map_or(v, |m: f64| m.max(v))))
    }

    pub fn algorithms(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for row in &self.rows {
            if !seen.contains(&row.algorithm) {
                seen.push(row.algorithm.clone());
            }
        }
        seen
    }

    /// Total time an algorithm spent recording, in nanoseconds.
    pub fn total_record_nanos(&self, algorithm: &str) -> u64 {
        self.timings
            .iter()
            .filter(|t| t.algorithm == algorithm)
            .map(|t| t.nanos)
            .sum()
    }

    /// Ascending mean of `metric`: the run ranking.
    pub fn ranking(&self, metric: MetricKind) -> Vec<(String, f64)> {
        let mut ranked: Vec<(String, f64)> = self
            .algorithms()
            .into_iter()
            .filter_map(|a| self.mean(&a, metric).map(|m| (a, m)))
            .collect();
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        ranked
    }

    /// Batches after `drift_end_batch` until the metric first returns to
    /// within `factor` times its mean over `1..=pre_drift_until`. `None`
    /// when it never does within the run.
    pub fn recovery_batches(
        &self,
        algorithm: &str,
        metric: MetricKind,
        pre_drift_until: u64,
        drift_end_batch: u64,
        factor: f64,
    ) -> Option<u64> {
        let values = self.values(algorithm, metric);
        let pre: Vec<f64> = values
            .iter()
            .filter(|(b, _)| *b <= pre_drift_until)
            .map(|(_, v)| *v)
            .collect();
        if pre.is_empty() {
            return None;
        }
        let bound = factor * pre.iter().sum::<f64>() / pre.len() as f64;
        values
            .iter()
            .filter(|(b, v)| *b > drift_end_batch && *v <= bound)
            .map(|(b, _)| b - drift_end_batch)
            .next()
    }

    /// Long-format CSV: `batch_index,algorithm,metric,value`, preceded by
    /// the producing configuration's fingerprint.
    pub fn to_csv(&self, fingerprint: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("# fingerprint: {fingerprint}\n"));
        out.push_str("batch_index,algorithm,metric,value\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.batch, row.algorithm, row.metric, row.value
            ));
        }
        out
    }

    /// Merges series measured under comparable conditions; refuses to mix
    /// runs whose fingerprints differ in anything but the sampler.
    pub fn merge(series: Vec<BenchmarkSeries>) -> Result<BenchmarkSeries> {
        let mut iter = series.into_iter();
        let mut merged = iter.next().ok_or(Error::EmptyInput("no series to merge"))?;
        for s in iter {
            if let (Some(a), Some(b)) = (merged.fingerprints.first(), s.fingerprints.first()) {
                if !a.comparable_with(b) {
                    return Err(Error::FingerprintMismatch(format!(
                        "runs are only rank-comparable when stream, partitions, decider, \
                         repartitioner, batch size and seed all match (run {} vs run {})",
                        a.shared_hex(),
                        b.shared_hex()
                    )));
                }
            }
            merged.fingerprints.extend(s.fingerprints);
            merged.rows.extend(s.rows);
            merged.timings.extend(s.timings);
        }
        Ok(merged)
    }
}

fn batch_ends(n: u64, batch_size: u64) -> Vec<u64> {
    let mut ends: Vec<u64> = (1..=n / batch_size).map(|b| b * batch_size).collect();
    if !n.is_multiple_of(batch_size) {
        ends.push(n);
    }
    ends
}

/// Feeds every sampler the identical stream and measures, at each
/// micro-batch end, the Hellinger distance between the sampler's reported
/// distribution (under top-K truncation) and the oracle's true
/// distribution at the current position, along with the live counter
/// count and time spent recording.
pub fn run_distance_benchmark(
    stream: &StreamBuffer,
    specs: &[SamplerSpec],
    batch_size: u64,
    top_k: usize,
    seed: u64,
) -> Result<BenchmarkSeries> {
    if batch_size == 0 {
        return Err(Error::InvalidParameter {
            name: "batch_size",
            reason: "must be at least 1".into(),
        });
    }
    if stream.is_empty() {
        return Err(Error::EmptyInput("stream"));
    }
    let mode = QueryMode::top_k(top_k)?;
    let drifts = Arc::new(stream.metadata.drift_set()?);
    drifts.validate().into_result()?;
    let ends = batch_ends(stream.keys.len() as u64, batch_size);
    let oracle_at: Vec<_> = ends
        .iter()
        .map(|&i| oracle_distribution(&drifts, i))
        .collect::<Result<_>>()?;

    let id = stream_id(stream);
    let mut fingerprints = Vec::new();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for spec in specs {
        let algorithm = spec.to_string();
        let mut sampler = spec.build(
            derive_seed(seed, &format!("sampler:{algorithm}")),
            Some(&drifts),
        )?;
        let mut cursor = 0usize;
        for (batch_idx, (&end, oracle)) in ends.iter().zip(&oracle_at).enumerate() {
            let slice = &stream.keys[cursor..end as usize];
            cursor = end as usize;
            let started = Instant::now();
            for &key in slice {
                sampler.record(key);
            }
            let nanos = started.elapsed().as_nanos() as u64;
            let distance = match sampler.query(mode).relative_frequencies() {
                Some(reported) => hellinger(&reported, oracle),
                // Nothing reported: no overlap with the truth.
                None => 1.0,
            };
            let batch = batch_idx as u64 + 1;
            rows.push(MetricRow {
                batch,
                algorithm: algorithm.clone(),
                metric: MetricKind::Hellinger,
                value: distance,
            });
            rows.push(MetricRow {
                batch,
                algorithm: algorithm.clone(),
                metric: MetricKind::Counters,
                value: sampler.counter_count() as f64,
            });
            timings.push(RecordTiming {
                algorithm: algorithm.clone(),
                batch,
                nanos,
            });
        }
        fingerprints.push(RunFingerprint {
            stream_id: id.clone(),
            num_partitions: None,
            decider_spec: None,
            repartitioner_spec: None,
            batch_size,
            sampler_spec: algorithm,
            seed,
        });
    }
    Ok(BenchmarkSeries {
        fingerprints,
        rows,
        timings,
    })
}

/// Simulates the two-stage shuffle: `m` first-stage sampler instances fed
/// by hash partitioning; per batch, the loads the *actual* elements would
/// put on each second-stage partition under the current routing (never
/// the sampler's own reports). After each batch the instances' estimates
/// are aggregated by summing counts per key, and if the decider fires a
/// fresh greedy routing is installed for the following batch.
pub fn run_imbalance_benchmark(
    stream: &StreamBuffer,
    spec: &SamplerSpec,
    num_partitions: u64,
    decider: &DeciderSpec,
    batch_size: u64,
    top_k: usize,
    seed: u64,
) -> Result<BenchmarkSeries> {
    if batch_size == 0 {
        return Err(Error::InvalidParameter {
            name: "batch_size",
            reason: "must be at least 1".into(),
        });
    }
    if num_partitions == 0 {
        return Err(Error::InvalidParameter {
            name: "num_partitions",
            reason: "need at least one partition".into(),
        });
    }
    if stream.is_empty() {
        return Err(Error::EmptyInput("stream"));
    }
    let mode = QueryMode::top_k(top_k)?;
    let drifts = Arc::new(stream.metadata.drift_set()?);
    drifts.validate().into_result()?;
    let algorithm = spec.to_string();

    let mut samplers: Vec<Box<dyn Sampler>> = (0..num_partitions)
        .map(|j| {
            spec.build(
                derive_seed(seed, &format!("worker:{j}:{algorithm}")),
                Some(&drifts),
            )
        })
        .collect::<Result<_>>()?;

    let mut routing = Partitioning::hash_only(num_partitions)?;
    let ends = batch_ends(stream.keys.len() as u64, batch_size);
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut cursor = 0usize;
    for (batch_idx, &end) in ends.iter().enumerate() {
        let slice = &stream.keys[cursor..end as usize];
        cursor = end as usize;
        let mut loads = vec![0u64; num_partitions as usize];
        let started = Instant::now();
        for &key in slice {
            let worker = fnv1a64(&key.0.to_le_bytes()) % num_partitions;
            samplers[worker as usize].record(key);
            loads[routing.partition_of(key) as usize] += 1;
        }
        let nanos = started.elapsed().as_nanos() as u64;

        let batch = batch_idx as u64 + 1;
        timings.push(RecordTiming {
            algorithm: algorithm.clone(),
            batch,
            nanos,
        });
        let imbalance = percent_imbalance(&LoadVector::from_counts(&loads)?)?;
        rows.push(MetricRow {
            batch,
            algorithm: algorithm.clone(),
            metric: MetricKind::Imbalance,
            value: imbalance,
        });
        rows.push(MetricRow {
            batch,
            algorithm: algorithm.clone(),
            metric: MetricKind::Counters,
            value: samplers.iter().map(|s| s.counter_count()).sum::<usize>() as f64,
        });

        let mut aggregate = std::collections::BTreeMap::new();
        let mut total = 0u64;
        for sampler in &samplers {
            total += sampler.total_processed();
            for (key, count) in sampler.query(mode).counts() {
                *aggregate.entry(key).or_insert(0.0) += count;
            }
        }
        let aggregate = Estimate::new(aggregate, total);
        if decider.fires(&aggregate, &routing) {
            routing = build_partitioning(&aggregate, num_partitions)?;
        }
    }

    let fingerprint = RunFingerprint {
        stream_id: stream_id(stream),
        num_partitions: Some(num_partitions),
        decider_spec: Some(decider.to_string()),
        repartitioner_spec: Some("greedy-lpt".into()),
        batch_size,
        sampler_spec: algorithm,
        seed,
    };
    Ok(BenchmarkSeries {
        fingerprints: vec![fingerprint],
        rows,
        timings,
    })
}
