//! Implementations behind the CLI subcommands. Everything is a plain
//! function over a typed config so tests can drive the exact production
//! paths.

use std::fs;
use std::path::{Path, PathBuf};

use driftbench_core::generator::{generate_stream, inject_bursts};
use driftbench_core::io::{load_stream, write_metadata_file, write_stream_file};
use driftbench_core::optimizer::{
    apply_config, benchmark_fitness, optimize, FitnessSpec, OptimizeParams, ParamSpace,
};
use driftbench_core::ranking::{
    run_distance_benchmark, run_imbalance_benchmark, BenchmarkSeries, MetricKind,
};
use driftbench_core::seed::derive_seed;
use driftbench_core::stream::{StreamBuffer, StreamMetadata};
use driftbench_core::{Error, Result};

use crate::config::{
    config_fingerprint, BurstCommandConfig, GenerateConfig, OptimizeCommandConfig,
    RankDistanceConfig, RankImbalanceConfig,
};

pub const STREAM_FILE: &str = "stream.bin";
pub const METADATA_FILE: &str = "metadata.json";
pub const BURST_LOG_FILE: &str = "burst_log.json";
pub const DISTANCE_CSV: &str = "distance.csv";
pub const IMBALANCE_CSV: &str = "imbalance.csv";
pub const TIMINGS_FILE: &str = "timings.json";
pub const BEST_FILE: &str = "best.json";
pub const HISTORY_CSV: &str = "history.csv";

fn ensure_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn input_paths(stream: &Option<PathBuf>, metadata: &Option<PathBuf>) -> Result<(PathBuf, PathBuf)> {
    match (stream, metadata) {
        (Some(s), Some(m)) => Ok((s.clone(), m.clone())),
        _ => Err(Error::InvalidParameter {
            name: "stream",
            reason: "this command needs --stream and --metadata (or the config's \
                     `stream`/`metadata` paths)"
                .into(),
        }),
    }
}

pub fn run_generate(cfg: &GenerateConfig, out: &Path) -> Result<()> {
    if cfg.n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "stream length must be at least 1".into(),
        });
    }
    let fingerprint = config_fingerprint(cfg);
    let mut metadata =
        StreamMetadata::new(cfg.n, cfg.num_keys, cfg.master_seed, cfg.drifts.clone());
    metadata.fingerprint = Some(fingerprint.clone());
    // Surface drift-rule violations before doing any work.
    metadata.drift_set()?.validate().into_result()?;
    let stream = generate_stream(metadata)?;

    ensure_out(out)?;
    write_stream_file(&out.join(STREAM_FILE), &stream.keys)?;
    write_metadata_file(&out.join(METADATA_FILE), &stream.metadata)?;
    println!(
        "generated {} elements over {} keys ({} drifts, seed {})",
        cfg.n,
        cfg.num_keys,
        cfg.drifts.len(),
        cfg.master_seed
    );
    println!("fingerprint: {fingerprint}");
    println!(
        "wrote {} and {}",
        out.join(STREAM_FILE).display(),
        out.join(METADATA_FILE).display()
    );
    Ok(())
}

pub fn run_burst(cfg: &BurstCommandConfig, out: &Path) -> Result<()> {
    let (stream_path, metadata_path) = input_paths(&cfg.stream, &cfg.metadata)?;
    let src = load_stream(&stream_path, &metadata_path)?;
    let fingerprint = config_fingerprint(cfg);
    let mut bursted = inject_bursts(
        &src,
        &cfg.burst,
        cfg.batch_size,
        derive_seed(cfg.master_seed, "burst"),
    )?;
    bursted.metadata.fingerprint = Some(fingerprint.clone());

    ensure_out(out)?;
    write_stream_file(&out.join(STREAM_FILE), &bursted.keys)?;
    write_metadata_file(&out.join(METADATA_FILE), &bursted.metadata)?;
    let log = bursted.metadata.burst_log.as_deref().unwrap_or(&[]);
    fs::write(
        out.join(BURST_LOG_FILE),
        serde_json::to_string_pretty(log)? + "\n",
    )?;
    let held: u64 = log
        .iter()
        .map(|e| e.held_counts.values().sum::<u64>())
        .sum();
    println!(
        "injected {} bursts ({} occurrences held back and released)",
        log.len(),
        held
    );
    println!("fingerprint: {fingerprint}");
    println!(
        "wrote {}, {} and {}",
        out.join(STREAM_FILE).display(),
        out.join(METADATA_FILE).display(),
        out.join(BURST_LOG_FILE).display()
    );
    Ok(())
}

fn write_series_outputs(
    series: &BenchmarkSeries,
    fingerprint: &str,
    out: &Path,
    csv_name: &str,
) -> Result<()> {
    ensure_out(out)?;
    fs::write(out.join(csv_name), series.to_csv(fingerprint))?;
    // Wall-clock record times are hardware-bound; they live next to the
    // deterministic series, not inside it.
    fs::write(
        out.join(TIMINGS_FILE),
        serde_json::to_string_pretty(&series.timings)? + "\n",
    )?;
    Ok(())
}

fn print_ranking(series: &BenchmarkSeries, metric: MetricKind) {
    println!(
        "rank  {:<55} {:>12} {:>12} {:>12} {:>10}",
        "algorithm", "mean", "max", "counters", "record_ms"
    );
    for (idx, (algorithm, mean)) in series.ranking(metric).iter().enumerate() {
        let max = series.max(algorithm, metric).unwrap_or(f64::NAN);
        let counters = series
            .mean(algorithm, MetricKind::Counters)
            .unwrap_or(f64::NAN);
        let millis = series.total_record_nanos(algorithm) as f64 / 1e6;
        println!(
            "{:>4}  {:<55} {:>12.6} {:>12.6} {:>12.1} {:>10.1}",
            idx + 1,
            algorithm,
            mean,
            max,
            counters,
            millis
        );
    }
}

pub fn run_rank_distance(cfg: &RankDistanceConfig, out: &Path) -> Result<()> {
    let (stream_path, metadata_path) = input_paths(&cfg.stream, &cfg.metadata)?;
    let stream = load_stream(&stream_path, &metadata_path)?;
    let fingerprint = config_fingerprint(cfg);
    let series = run_distance_benchmark(
        &stream,
        &cfg.samplers,
        cfg.batch_size,
        cfg.top_k,
        cfg.master_seed,
    )?;
    write_series_outputs(&series, &fingerprint, out, DISTANCE_CSV)?;
    println!("fingerprint: {fingerprint}");
    println!("ranking by mean Hellinger distance to the oracle (ascending):");
    print_ranking(&series, MetricKind::Hellinger);
    println!("wrote {}", out.join(DISTANCE_CSV).display());
    Ok(())
}

pub fn run_rank_imbalance(cfg: &RankImbalanceConfig, out: &Path) -> Result<()> {
    let (stream_path, metadata_path) = input_paths(&cfg.stream, &cfg.metadata)?;
    let stream = load_stream(&stream_path, &metadata_path)?;
    let fingerprint = config_fingerprint(cfg);
    let runs = cfg
        .samplers
        .iter()
        .map(|spec| {
            run_imbalance_benchmark(
                &stream,
                spec,
                cfg.partitions,
                &cfg.decider,
                cfg.batch_size,
                cfg.top_k,
                cfg.master_seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let series = BenchmarkSeries::merge(runs)?;
    write_series_outputs(&series, &fingerprint, out, IMBALANCE_CSV)?;
    println!("fingerprint: {fingerprint}");
    println!(
        "ranking by mean percent imbalance over {} partitions (ascending):",
        cfg.partitions
    );
    print_ranking(&series, MetricKind::Imbalance);
    println!("wrote {}", out.join(IMBALANCE_CSV).display());
    Ok(())
}

pub fn run_optimize(cfg: &OptimizeCommandConfig, out: &Path) -> Result<()> {
    if cfg.streams.is_empty() {
        return Err(Error::EmptyInput("training streams"));
    }
    let fingerprint = config_fingerprint(cfg);
    let streams: Vec<StreamBuffer> = cfg
        .streams
        .iter()
        .map(|paths| load_stream(&paths.stream, &paths.metadata))
        .collect::<Result<_>>()?;
    let shortest = streams
        .iter()
        .map(|s| s.metadata.n)
        .min()
        .expect("non-empty");

    let mut space = ParamSpace::new(cfg.space.clone())?;
    space.bound_windows_by_stream(shortest);
    let fitness_spec = FitnessSpec {
        streams,
        batch_size: cfg.batch_size,
        top_k: cfg.top_k,
        weights: cfg.weights,
        anti_overfit: cfg.anti_overfit,
    };
    let mut fitness = benchmark_fitness(
        &fitness_spec,
        &cfg.template,
        derive_seed(cfg.master_seed, "fitness"),
    )?;
    let result = optimize(
        &space,
        &cfg.initial,
        &mut fitness,
        &OptimizeParams {
            generations: cfg.generations,
            survivors: cfg.survivors,
            children_per_survivor: cfg.children_per_survivor,
            seed: derive_seed(cfg.master_seed, "optimizer"),
        },
    )?;

    ensure_out(out)?;
    let best_spec = apply_config(&cfg.template, &result.best.config);
    let best_json = serde_json::json!({
        "fingerprint": fingerprint,
        "algorithm": best_spec.to_string(),
        "sampler": best_spec,
        "config": result.best.config,
        "fitness": result.best.fitness,
    });
    fs::write(
        out.join(BEST_FILE),
        serde_json::to_string_pretty(&best_json)? + "\n",
    )?;
    let mut history = format!("# fingerprint: {fingerprint}\n");
    history.push_str("generation,best_fitness,population,evaluations\n");
    for row in &result.history {
        history.push_str(&format!(
            "{},{},{},{}\n",
            row.generation, row.best_fitness, row.population, row.evaluations
        ));
    }
    fs::write(out.join(HISTORY_CSV), history)?;

    println!("fingerprint: {fingerprint}");
    println!(
        "best: {} with fitness {} after {} generations",
        best_spec,
        result.best.fitness,
        result.history.len()
    );
    println!(
        "wrote {} and {}",
        out.join(BEST_FILE).display(),
        out.join(HISTORY_CSV).display()
    );
    Ok(())
}

fn check_fingerprint(what: &str, found: Option<&str>, expected: &str) -> Result<()> {
    match found {
        Some(f) if f == expected => Ok(()),
        Some(f) => Err(Error::FingerprintMismatch(format!(
            "{what}: embeds {f}, config derives {expected}"
        ))),
        None => Err(Error::FingerprintMismatch(format!(
            "{what}: no fingerprint embedded"
        ))),
    }
}

fn csv_fingerprint(path: &Path) -> Result<Option<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .next()
        .and_then(|line| line.strip_prefix("# fingerprint: "))
        .map(str::to_owned))
}

/// Re-derives the fingerprint of a config and checks that the outputs in
/// `out` embed it; for generated streams the key sequence itself is
/// re-derived and compared.
pub fn run_verify(command: &str, config: &serde_json::Value, out: &Path) -> Result<()> {
    let mut checked = Vec::new();
    match command {
        "generate" => {
            let cfg: GenerateConfig = serde_json::from_value(config.clone())?;
            let expected = config_fingerprint(&cfg);
            let metadata_path = out.join(METADATA_FILE);
            let stream = load_stream(&out.join(STREAM_FILE), &metadata_path)?;
            check_fingerprint(
                METADATA_FILE,
                stream.metadata.fingerprint.as_deref(),
                &expected,
            )?;
            checked.push(METADATA_FILE);
            let mut metadata =
                StreamMetadata::new(cfg.n, cfg.num_keys, cfg.master_seed, cfg.drifts.clone());
            metadata.fingerprint = Some(expected);
            let regenerated = generate_stream(metadata)?;
            if regenerated.keys != stream.keys {
                return Err(Error::FingerprintMismatch(format!(
                    "{STREAM_FILE}: key sequence differs from a regeneration under this config"
                )));
            }
            checked.push(STREAM_FILE);
        }
        "burst" => {
            let cfg: BurstCommandConfig = serde_json::from_value(config.clone())?;
            let expected = config_fingerprint(&cfg);
            let stream = load_stream(&out.join(STREAM_FILE), &out.join(METADATA_FILE))?;
            check_fingerprint(
                METADATA_FILE,
                stream.metadata.fingerprint.as_deref(),
                &expected,
            )?;
            checked.push(METADATA_FILE);
            checked.push(STREAM_FILE);
        }
        "rank-distance" => {
            let cfg: RankDistanceConfig = serde_json::from_value(config.clone())?;
            let expected = config_fingerprint(&cfg);
            let path = out.join(DISTANCE_CSV);
            check_fingerprint(DISTANCE_CSV, csv_fingerprint(&path)?.as_deref(), &expected)?;
            checked.push(DISTANCE_CSV);
        }
        "rank-imbalance" => {
            let cfg: RankImbalanceConfig = serde_json::from_value(config.clone())?;
            let expected = config_fingerprint(&cfg);
            let path = out.join(IMBALANCE_CSV);
            check_fingerprint(IMBALANCE_CSV, csv_fingerprint(&path)?.as_deref(), &expected)?;
            checked.push(IMBALANCE_CSV);
        }
        "optimize" => {
            let cfg: OptimizeCommandConfig = serde_json::from_value(config.clone())?;
            let expected = config_fingerprint(&cfg);
            let best: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(out.join(BEST_FILE))?)?;
            check_fingerprint(
                BEST_FILE,
                best.get("fingerprint").and_then(|f| f.as_str()),
                &expected,
            )?;
            checked.push(BEST_FILE);
            let path = out.join(HISTORY_CSV);
            check_fingerprint(HISTORY_CSV, csv_fingerprint(&path)?.as_deref(), &expected)?;
            checked.push(HISTORY_CSV);
        }
        other => {
            return Err(Error::InvalidParameter {
                name: "command",
                reason: format!(
                    "cannot verify `{other}`; expected one of generate, burst, \
                     rank-distance, rank-imbalance, optimize"
                ),
            })
        }
    }
    println!("verified: {}", checked.join(", "));
    Ok(())
}
