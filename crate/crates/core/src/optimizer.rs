//! Population-based hyperparameter search: benchmark, select the best,
//! evolve lattice neighbors, carry the survivors over.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{run_distance_benchmark, MetricKind};
use crate::samplers::SamplerSpec;
use crate::stream::StreamBuffer;

/// A point in hyperparameter space: parameter name to value.
pub type Config = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamKind {
    Integer,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamScale {
    /// Neighbors lie one additive step away.
    Linear,
    /// Neighbors lie one multiplicative factor away; for ε-like
    /// parameters spanning orders of magnitude.
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDef {
    pub name: String,
    pub kind: ParamKind,
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub scale: ParamScale,
}

impl ParamDef {
    pub fn integer(name: &str, min: u64, max: u64, step: u64) -> Self {
        ParamDef {
            name: name.into(),
            kind: ParamKind::Integer,
            min: min as f64,
            max: max as f64,
            step: step as f64,
            scale: ParamScale::Linear,
        }
    }

    pub fn real(name: &str, min: f64, max: f64, step: f64) -> Self {
        ParamDef {
            name: name.into(),
            kind: ParamKind::Real,
            min,
            max,
            step,
            scale: ParamScale::Linear,
        }
    }

    /// A probability: hard-bounded to `[0, 1]` whatever the step does.
    pub fn probability(name: &str, step: f64) -> Self {
        ParamDef {
            name: name.into(),
            kind: ParamKind::Real,
            min: 0.0,
            max: 1.0,
            step,
            scale: ParamScale::Linear,
        }
    }

    pub fn logarithmic(name: &str, min: f64, max: f64, factor: f64) -> Self {
        ParamDef {
            name: name.into(),
            kind: ParamKind::Real,
            min,
            max,
            step: factor,
            scale: ParamScale::Logarithmic,
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidParameter {
                name: "param",
                reason: format!("{}: {reason}", self.name),
            })
        };
        if self.min.is_nan() || self.max.is_nan() || self.min > self.max {
            return fail(format!("min {} > max {}", self.min, self.max));
        }
        match self.scale {
            ParamScale::Linear => {
                if !self.step.is_finite() || self.step <= 0.0 {
                    return fail(format!("step {} must be positive", self.step));
                }
            }
            ParamScale::Logarithmic => {
                if !self.step.is_finite() || self.step <= 1.0 {
                    return fail(format!("log factor {} must exceed 1", self.step));
                }
                if self.min <= 0.0 {
                    return fail("logarithmic scale needs a positive minimum".into());
                }
            }
        }
        Ok(())
    }

    fn clamp(&self, value: f64) -> f64 {
        let v = value.clamp(self.min, self.max);
        match self.kind {
            ParamKind::Integer => v.round(),
            ParamKind::Real => v,
        }
    }

    fn step_by(&self, value: f64, direction: i8) -> f64 {
        let moved = match (self.scale, direction) {
            (_, 0) => value,
            (ParamScale::Linear, d) => value + d as f64 * self.step,
            (ParamScale::Logarithmic, 1) => value * self.step,
            (ParamScale::Logarithmic, _) => value / self.step,
        };
        self.clamp(moved)
    }

    /// Nearest lattice point `min + k·step` (or `min·factor^k`).
    fn snap(&self, value: f64) -> f64 {
        let v = value.clamp(self.min, self.max);
        let snapped = match self.scale {
            ParamScale::Linear => {
                let k = ((v - self.min) / self.step).round();
                self.min + k * self.step
            }
            ParamScale::Logarithmic => {
                let k = ((v / self.min).ln() / self.step.ln()).round();
                self.min * self.step.powf(k)
            }
        };
        self.clamp(snapped)
    }
}

/// The searchable hyperparameter lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    params: Vec<ParamDef>,
}

/// Hyperparameters that denote record windows; their range must not
/// exceed the training streams.
pub const WINDOW_PARAM_NAMES: [&str; 6] = [
    "threshold",
    "switch_threshold",
    "checkpoint_window",
    "check_threshold",
    "window",
    "basic_window",
];

impl ParamSpace {
    pub fn new(params: Vec<ParamDef>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::EmptyInput("parameter space"));
        }
        for p in &params {
            p.validate()?;
        }
        Ok(ParamSpace { params })
    }

    pub fn params(&self) -> &[ParamDef] {
        &self.params
    }

    /// Caps window-like parameters at the shortest training stream: a
    /// window larger than the stream can never fill.
    pub fn bound_windows_by_stream(&mut self, stream_len: u64) {
        for p in &mut self.params {
            if WINDOW_PARAM_NAMES.contains(&p.name.as_str()) {
                p.max = p.max.min(stream_len as f64);
                p.min = p.min.min(p.max);
            }
        }
    }

    /// Clamps and snaps a config onto the lattice, checking that its keys
    /// match the space exactly.
    pub fn snap(&self, config: &Config) -> Result<Config> {
        if config.len() != self.params.len() {
            return Err(Error::InvalidParameter {
                name: "config",
                reason: "config keys do not match the parameter space".into(),
            });
        }
        let mut snapped = Config::new();
        for p in &self.params {
            let value = config.get(&p.name).ok_or(Error::InvalidParameter {
                name: "config",
                reason: format!("missing parameter {}", p.name),
            })?;
            snapped.insert(p.name.clone(), p.snap(*value));
        }
        Ok(snapped)
    }

    fn apply_move(&self, config: &Config, directions: &[i8]) -> Config {
        self.params
            .iter()
            .zip(directions)
            .map(|(p, &d)| (p.name.clone(), p.step_by(config[&p.name], d)))
            .collect()
    }
}

/// Distinct configs from the ±1-step neighborhood of `config`, sampled
/// without replacement. Moves that clamp back onto the identity are
/// excluded, so a fully pinned space yields an empty list.
pub fn neighbors<R: Rng>(
    config: &Config,
    space: &ParamSpace,
    count: usize,
    rng: &mut R,
) -> Vec<Config> {
    fn consider(
        candidate: Config,
        original: &Config,
        seen: &mut std::collections::BTreeSet<String>,
        found: &mut Vec<Config>,
    ) {
        if candidate == *original {
            return;
        }
        if seen.insert(config_id(&candidate)) {
            found.push(candidate);
        }
    }

    let d = space.params.len();
    let mut seen = std::collections::BTreeSet::new();
    let mut found: Vec<Config> = Vec::new();

    // 3^d choices stay enumerable for small d; beyond that, sample moves.
    if d <= 7 {
        let total = 3usize.pow(d as u32);
        let mut candidates = Vec::new();
        for mut code in 1..total {
            let mut directions = vec![0i8; d];
            for slot in directions.iter_mut() {
                *slot = [0, 1, -1][code % 3];
                code /= 3;
            }
            candidates.push(directions);
        }
        // Uniform subset without replacement.
        for i in (1..candidates.len()).rev() {
            let j = rng.gen_range(0..=i);
            candidates.swap(i, j);
        }
        for directions in candidates {
            if found.len() == count {
                break;
            }
            consider(
                space.apply_move(config, &directions),
                config,
                &mut seen,
                &mut found,
            );
        }
    } else {
        let mut attempts = 0;
        let max_attempts = count.saturating_mul(50).max(200);
        while found.len() < count && attempts < max_attempts {
            attempts += 1;
            let directions: Vec<i8> = (0..d).map(|_| [0, 1, -1][rng.gen_range(0..3)]).collect();
            if directions.iter().all(|&x| x == 0) {
                continue;
            }
            consider(
                space.apply_move(config, &directions),
                config,
                &mut seen,
                &mut found,
            );
        }
    }
    found
}

/// A benchmarked population member. Lower fitness is better.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Individual {
    pub config: Config,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: u64,
    pub best_fitness: f64,
    pub population: usize,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best: Individual,
    pub history: Vec<GenerationStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeParams {
    pub generations: u64,
    pub survivors: usize,
    pub children_per_survivor: usize,
    pub seed: u64,
}

fn config_id(config: &Config) -> String {
    config
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Local-minimum search: benchmark the population, keep the
/// best-`survivors` members, evolve each survivor's lattice neighbors,
/// and add the survivors to the new population. Fitness values are cached
/// by config, and the best individual ever benchmarked is returned.
pub fn optimize(
    space: &ParamSpace,
    initial: &[Config],
    fitness: &mut dyn FnMut(&Config) -> f64,
    params: &OptimizeParams,
) -> Result<OptimizeResult> {
    if initial.is_empty() {
        return Err(Error::EmptyInput("initial population"));
    }
    if params.generations == 0 || params.survivors == 0 || params.children_per_survivor == 0 {
        return Err(Error::InvalidParameter {
            name: "optimize",
            reason: "generations, survivors and children_per_survivor must be at least 1".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut cache: HashMap<String, f64> = HashMap::new();
    let mut evaluations = 0u64;
    let mut population: Vec<Config> = initial
        .iter()
        .map(|c| space.snap(c))
        .collect::<Result<_>>()?;
    let mut best: Option<Individual> = None;
    let mut history = Vec::new();

    for generation in 1..=params.generations {
        let mut scored: Vec<Individual> = Vec::with_capacity(population.len());
        for config in &population {
            let key = config_id(config);
            let fit = match cache.get(&key) {
                Some(&f) => f,
                None => {
                    let f = fitness(config);
                    evaluations += 1;
                    cache.insert(key, f);
                    f
                }
            };
            scored.push(Individual {
                config: config.clone(),
                fitness: fit,
            });
        }
        scored.sort_by(|a, b| {
            a.fitness
                .total_cmp(&b.fitness)
                .then_with(|| config_id(&a.config).cmp(&config_id(&b.config)))
        });
        scored.dedup_by(|a, b| a.config == b.config);
        let survivors: Vec<Individual> = scored.into_iter().take(params.survivors).collect();
        if best
            .as_ref()
            .map(|b| survivors[0].fitness < b.fitness)
            .unwrap_or(true)
        {
            best = Some(survivors[0].clone());
        }
        history.push(GenerationStats {
            generation,
            best_fitness: best.as_ref().expect("set above").fitness,
            population: population.len(),
            evaluations,
        });

        let mut next: Vec<Config> = survivors.iter().map(|s| s.config.clone()).collect();
        for survivor in &survivors {
            next.extend(neighbors(
                &survivor.config,
                space,
                params.children_per_survivor,
                &mut rng,
            ));
        }
        population = next;
    }

    Ok(OptimizeResult {
        best: best.expect("at least one generation ran"),
        history,
    })
}

/// Metric weights combined into one fitness value (lower is better).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessWeights {
    /// Weight of the mean Hellinger distance to the oracle.
    pub hellinger: f64,
    /// Weight of the mean live-counter count.
    pub counters: f64,
    /// Weight of the total record time in seconds. Non-zero weights make
    /// fitness (and therefore optimizer outputs) timing-dependent.
    pub time: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        FitnessWeights {
            hellinger: 1.0,
            counters: 0.0,
            time: 0.0,
        }
    }
}

/// Benchmark-backed fitness over a set of training streams.
pub struct FitnessSpec {
    pub streams: Vec<StreamBuffer>,
    pub batch_size: u64,
    pub top_k: usize,
    pub weights: FitnessWeights,
    /// Require several training streams so one stream's quirks cannot be
    /// fitted.
    pub anti_overfit: bool,
}

impl FitnessSpec {
    pub fn validate(&self) -> Result<()> {
        if self.streams.is_empty() {
            return Err(Error::EmptyInput("training streams"));
        }
        if self.anti_overfit && self.streams.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "streams",
                reason: "anti-overfitting mode needs at least two training streams".into(),
            });
        }
        Ok(())
    }
}

/// Substitutes config values into a sampler spec by parameter name,
/// recursing into wrapped inner samplers.
pub fn apply_config(spec: &SamplerSpec, config: &Config) -> SamplerSpec {
    let real = |name: &str, fallback: f64| config.get(name).copied().unwrap_or(fallback);
    let int = |name: &str, fallback: u64| {
        config
            .get(name)
            .map(|v| v.round().max(1.0) as u64)
            .unwrap_or(fallback)
    };
    match spec {
        SamplerSpec::ExactCounting | SamplerSpec::Oracle => spec.clone(),
        SamplerSpec::LossyCounting { epsilon } => SamplerSpec::LossyCounting {
            epsilon: real("epsilon", *epsilon),
        },
        SamplerSpec::SpaceSaving { capacity } => SamplerSpec::SpaceSaving {
            capacity: int("capacity", *capacity as u64) as usize,
        },
        SamplerSpec::StickySampling {
            support,
            error,
            failure,
        } => SamplerSpec::StickySampling {
            support: real("support", *support),
            error: real("error", *error),
            failure: real("failure", *failure),
        },
        SamplerSpec::Frequent {
            basic_window,
            windows,
            k,
        } => SamplerSpec::Frequent {
            basic_window: int("basic_window", *basic_window),
            windows: int("windows", *windows as u64) as usize,
            k: int("k", *k as u64) as usize,
        },
        SamplerSpec::Landmark { inner, window } => SamplerSpec::Landmark {
            inner: Box::new(apply_config(inner, config)),
            window: int("window", *window),
        },
        SamplerSpec::TemporalSmoothed {
            inner,
            threshold,
            switch_threshold,
        } => SamplerSpec::TemporalSmoothed {
            inner: Box::new(apply_config(inner, config)),
            threshold: int("threshold", *threshold),
            switch_threshold: int("switch_threshold", *switch_threshold),
        },
        SamplerSpec::CheckpointSmoothed {
            inner,
            checkpoint_window,
            check_threshold,
            error_threshold,
        } => SamplerSpec::CheckpointSmoothed {
            inner: Box::new(apply_config(inner, config)),
            checkpoint_window: int("checkpoint_window", *checkpoint_window),
            check_threshold: int("check_threshold", *check_threshold),
            error_threshold: real("error_threshold", *error_threshold),
        },
    }
}

/// Builds a fitness function that benchmarks a config's sampler against
/// the oracle on every training stream and averages the weighted metric
/// combination. Configs that produce unbuildable samplers score infinity.
pub fn benchmark_fitness<'a>(
    fitness_spec: &'a FitnessSpec,
    template: &'a SamplerSpec,
    seed: u64,
) -> Result<impl FnMut(&Config) -> f64 + 'a> {
    fitness_spec.validate()?;
    let weights = fitness_spec.weights;
    Ok(move |config: &Config| {
        let spec = apply_config(template, config);
        let mut total = 0.0;
        for (idx, stream) in fitness_spec.streams.iter().enumerate() {
            let series = match run_distance_benchmark(
                stream,
                std::slice::from_ref(&spec),
                fitness_spec.batch_size,
                fitness_spec.top_k,
                crate::seed::derive_seed(seed, &format!("fitness:{idx}")),
            ) {
                Ok(series) => series,
                Err(_) => return f64::INFINITY,
            };
            let algorithm = spec.to_string();
            let hellinger = series
                .mean(&algorithm, MetricKind::Hellinger)
                .unwrap_or(f64::INFINITY);
            let counters = series
                .mean(&algorithm, MetricKind::Counters)
                .unwrap_or(f64::INFINITY);
            let secs = series.total_record_nanos(&algorithm) as f64 / 1e9;
            total +=
                weights.hellinger * hellinger + weights.counters * counters + weights.time * secs;
        }
        total / fitness_spec.streams.len() as f64
    })
}
