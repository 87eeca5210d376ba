//! `driftbench`: generate drifting synthetic streams, burst them, rank
//! sampling algorithms against an oracle, and tune their hyperparameters.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use driftbench_core::{Error, Result};

pub mod commands;
pub mod config;

#[derive(Debug, Parser)]
#[command(
    name = "driftbench",
    version,
    about = "Benchmark and rank streaming frequency estimators on synthetic drifting streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in configuration preset (see README)
    #[arg(long)]
    pub preset: Option<String>,
    /// Override the config's master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Input stream file (burst and rank commands)
    #[arg(long)]
    pub stream: Option<PathBuf>,
    /// Input metadata file (burst and rank commands)
    #[arg(long)]
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic stream and its metadata
    Generate(RunArgs),
    /// Inject micro-bursts into an existing stream
    Burst(RunArgs),
    /// Rank samplers by Hellinger distance to the oracle per micro-batch
    RankDistance(RunArgs),
    /// Rank samplers by simulated shuffle load imbalance per micro-batch
    RankImbalance(RunArgs),
    /// Local-minimum search over sampler hyperparameters
    Optimize(RunArgs),
    /// Check that a config's outputs embed its fingerprint
    Verify {
        /// Which command produced the outputs
        #[arg(long)]
        command: String,
        #[command(flatten)]
        args: RunArgs,
    },
}

/// Resolves `--config`/`--preset` into the raw config value and applies
/// the `--seed`, `--stream` and `--metadata` overrides.
fn resolve_config(command: &str, args: &RunArgs) -> Result<serde_json::Value> {
    let mut value = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)?
        }
        (None, Some(preset)) => config::lookup_preset(command, preset)?,
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter {
                name: "config",
                reason: "pass either --config or --preset, not both".into(),
            })
        }
        (None, None) => {
            return Err(Error::InvalidParameter {
                name: "config",
                reason: "a configuration is required: --config PATH or --preset NAME".into(),
            })
        }
    };
    let object = value.as_object_mut().ok_or(Error::InvalidParameter {
        name: "config",
        reason: "configuration must be a JSON object".into(),
    })?;
    if let Some(seed) = args.seed {
        object.insert("master_seed".into(), seed.into());
    }
    if let Some(stream) = &args.stream {
        object.insert("stream".into(), stream.display().to_string().into());
    }
    if let Some(metadata) = &args.metadata {
        object.insert("metadata".into(), metadata.display().to_string().into());
    }
    Ok(value)
}

/// Runs one parsed invocation end to end.
pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(args) => {
            let cfg = serde_json::from_value(resolve_config("generate", args)?)?;
            commands::run_generate(&cfg, &args.out)
        }
        Command::Burst(args) => {
            let cfg = serde_json::from_value(resolve_config("burst", args)?)?;
            commands::run_burst(&cfg, &args.out)
        }
        Command::RankDistance(args) => {
            let cfg = serde_json::from_value(resolve_config("rank-distance", args)?)?;
            commands::run_rank_distance(&cfg, &args.out)
        }
        Command::RankImbalance(args) => {
            let cfg = serde_json::from_value(resolve_config("rank-imbalance", args)?)?;
            commands::run_rank_imbalance(&cfg, &args.out)
        }
        Command::Optimize(args) => {
            let cfg = serde_json::from_value(resolve_config("optimize", args)?)?;
            commands::run_optimize(&cfg, &args.out)
        }
        Command::Verify { command, args } => {
            let value = resolve_config(command, args)?;
            commands::run_verify(command, &value, &args.out)
        }
    }
}

/// Exit code contract: 0 ok, 1 validation trouble, 2 I/O trouble.
pub fn exit_code_for(error: &Error) -> i32 {
    if error.is_validation() {
        1
    } else {
        2
    }
}
