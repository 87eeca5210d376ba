//! Benchmarking, ranking and hyperparameter optimization for streaming
//! frequency estimators, built around a deterministic synthetic stream
//! generator with formally defined concept drifts, dynamic micro-bursts,
//! and a metadata-backed oracle baseline.
//!
//! The crate is organized along the pipeline:
//!
//! * [`dist`], [`concept`], [`drift`]: the formal objects. Distributions
//!   over keys, concepts covering the stream, drift records, and the
//!   constructions converting between the two views.
//! * [`generator`]: Zipfian distributions, drift-driven stream drawing,
//!   and micro-burst injection; [`scenario`] for randomized but valid
//!   drift scenarios.
//! * [`samplers`]: the sampler contract and the baseline estimators;
//!   [`adaptive`]: the drift-aware wrappers and the oracle.
//! * [`metrics`]: Hellinger distance, smoothed KL divergence, percent
//!   imbalance, exact ground truth.
//! * [`ranking`]: the distance-to-oracle and load-imbalance harnesses.
//! * [`optimizer`]: local-minimum hyperparameter search.
//! * [`io`]: the stream/metadata file formats; [`seed`]: derived RNG
//!   streams.

pub mod adaptive;
pub mod concept;
pub mod dist;
pub mod drift;
pub mod error;
pub mod generator;
pub mod io;
pub mod metrics;
pub mod optimizer;
pub mod ranking;
pub mod samplers;
pub mod scenario;
pub mod seed;
pub mod stream;

pub use dist::{Key, ProbDist};
pub use error::{Error, Result};
