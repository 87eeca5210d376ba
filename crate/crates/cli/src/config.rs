//! Per-command run configurations, their fingerprints, and the built-in
//! presets.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use driftbench_core::generator::BurstConfig;
use driftbench_core::optimizer::{Config, FitnessWeights, ParamDef};
use driftbench_core::ranking::DeciderSpec;
use driftbench_core::samplers::SamplerSpec;
use driftbench_core::seed::fnv1a64;
use driftbench_core::stream::{DistSpec, DriftSpec};
use driftbench_core::{Error, Result};

/// The experiment scale used throughout the built-in presets.
pub mod preset_scale {
    pub const STREAM_LEN: u64 = 5_000_000;
    pub const NUM_KEYS: u64 = 100_000;
    pub const BATCH_SIZE: u64 = 30_000;
    pub const TOP_K: usize = 300;
    pub const PARTITIONS: u64 = 5;
    pub const TMP_THRESHOLD: u64 = 40_000;
    pub const TMP_SWITCH_THRESHOLD: u64 = 40_000;
    pub const CPS_CHECKPOINT_WINDOW: u64 = 40_000;
    pub const CPS_CHECK_THRESHOLD: u64 = 40_000;
    pub const CPS_ERROR_THRESHOLD: f64 = 0.2;
    pub const LOSSY_EPSILON: f64 = 1e-4;
    /// Gradual drift length: ten micro-batches centered on the stream
    /// midpoint.
    pub const DRIFT_LEN: u64 = 300_000;
    pub const MASTER_SEED: u64 = 20_200_617;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub master_seed: u64,
    pub n: u64,
    pub num_keys: u64,
    pub drifts: Vec<DriftSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstCommandConfig {
    pub master_seed: u64,
    pub batch_size: u64,
    pub burst: BurstConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDistanceConfig {
    pub master_seed: u64,
    pub batch_size: u64,
    pub top_k: usize,
    pub samplers: Vec<SamplerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankImbalanceConfig {
    pub master_seed: u64,
    pub batch_size: u64,
    pub top_k: usize,
    pub partitions: u64,
    pub decider: DeciderSpec,
    pub samplers: Vec<SamplerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamPaths {
    pub stream: PathBuf,
    pub metadata: PathBuf,
}

fn default_weights() -> FitnessWeights {
    FitnessWeights::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeCommandConfig {
    pub master_seed: u64,
    pub batch_size: u64,
    pub top_k: usize,
    pub streams: Vec<StreamPaths>,
    /// Sampler whose named parameters the optimizer varies.
    pub template: SamplerSpec,
    pub space: Vec<ParamDef>,
    pub initial: Vec<Config>,
    pub generations: u64,
    pub survivors: usize,
    pub children_per_survivor: usize,
    #[serde(default = "default_weights")]
    pub weights: FitnessWeights,
    #[serde(default)]
    pub anti_overfit: bool,
}

/// Stable 64-bit fingerprint of a configuration's canonical JSON,
/// embedded in every output the configuration produces.
pub fn config_fingerprint<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    format!("{:016x}", fnv1a64(json.as_bytes()))
}

fn zipf(exponent: f64, perm_seed: Option<u64>) -> DistSpec {
    DistSpec::Zipf {
        exponent,
        perm_seed,
    }
}

/// The reference stream: Zipfian traffic with one gradual permutation
/// drift centered on the stream midpoint.
pub fn preset_generate(exponent: f64) -> GenerateConfig {
    use preset_scale::*;
    let mid = STREAM_LEN / 2;
    GenerateConfig {
        master_seed: MASTER_SEED,
        n: STREAM_LEN,
        num_keys: NUM_KEYS,
        drifts: vec![
            DriftSpec::abrupt(1, zipf(exponent, None), zipf(exponent, None)),
            DriftSpec::gradual(
                mid - DRIFT_LEN / 2,
                mid + DRIFT_LEN / 2,
                zipf(exponent, None),
                zipf(exponent, Some(1)),
            ),
        ],
    }
}

/// The four-way comparison run on the reference stream.
pub fn preset_samplers() -> Vec<SamplerSpec> {
    use preset_scale::*;
    let lossy = SamplerSpec::LossyCounting {
        epsilon: LOSSY_EPSILON,
    };
    vec![
        SamplerSpec::Frequent {
            basic_window: BATCH_SIZE,
            windows: 2,
            k: 2 * TOP_K,
        },
        lossy.clone(),
        SamplerSpec::TemporalSmoothed {
            inner: Box::new(lossy.clone()),
            threshold: TMP_THRESHOLD,
            switch_threshold: TMP_SWITCH_THRESHOLD,
        },
        SamplerSpec::CheckpointSmoothed {
            inner: Box::new(lossy),
            checkpoint_window: CPS_CHECKPOINT_WINDOW,
            check_threshold: CPS_CHECK_THRESHOLD,
            error_threshold: CPS_ERROR_THRESHOLD,
        },
    ]
}

pub fn preset_rank_distance() -> RankDistanceConfig {
    use preset_scale::*;
    RankDistanceConfig {
        master_seed: MASTER_SEED,
        batch_size: BATCH_SIZE,
        top_k: TOP_K,
        samplers: preset_samplers(),
        stream: None,
        metadata: None,
    }
}

pub fn preset_rank_imbalance() -> RankImbalanceConfig {
    use preset_scale::*;
    RankImbalanceConfig {
        master_seed: MASTER_SEED,
        batch_size: BATCH_SIZE,
        top_k: TOP_K,
        partitions: PARTITIONS,
        decider: DeciderSpec::ImbalanceThreshold { theta: 10.0 },
        samplers: preset_samplers(),
        stream: None,
        metadata: None,
    }
}

pub fn preset_burst(cfg: BurstConfig) -> BurstCommandConfig {
    use preset_scale::*;
    BurstCommandConfig {
        master_seed: MASTER_SEED,
        batch_size: BATCH_SIZE,
        burst: cfg,
        stream: None,
        metadata: None,
    }
}

/// Resolves a preset name for a command, or lists the valid names.
pub fn lookup_preset(command: &str, name: &str) -> Result<serde_json::Value> {
    let value = match (command, name) {
        ("generate", "paper-sec6") => serde_json::to_value(preset_generate(1.0))?,
        ("generate", "paper-sec6-exp2") => serde_json::to_value(preset_generate(2.0))?,
        ("burst", "light-burst") => serde_json::to_value(preset_burst(BurstConfig::light()))?,
        ("burst", "heavy-burst") => serde_json::to_value(preset_burst(BurstConfig::heavy()))?,
        ("rank-distance", "paper-sec6") => serde_json::to_value(preset_rank_distance())?,
        ("rank-imbalance", "paper-sec6") => serde_json::to_value(preset_rank_imbalance())?,
        _ => {
            return Err(Error::InvalidParameter {
                name: "preset",
                reason: format!(
                    "no preset `{name}` for `{command}`; available: generate: paper-sec6, \
                     paper-sec6-exp2; burst: light-burst, heavy-burst; rank-distance: \
                     paper-sec6; rank-imbalance: paper-sec6"
                ),
            })
        }
    };
    Ok(value)
}
