//! Normal-approximation bounds for exchangeable pairs, with the machinery to
//! verify them: exact subgraph-count combinatorics on Erdős–Rényi graphs,
//! local-dependence / dependency-graph structures, Monte-Carlo tail and ratio
//! curves, and evaluators for every explicit bound.
//!
//! Modules:
//! - [`normal`]: standard-normal primitives and the Stein-equation solution.
//! - [`graph`]: pattern graphs, copy enumeration in `K_N`, exact moments, ψ.
//! - [`er`]: Erdős–Rényi sampling, subgraph counting, the edge-resampling
//!   exchangeable pair and its conditional drift terms.
//! - [`local`]: local-dependence structures, built-in random fields, the
//!   coordinate-resampling exchangeable pair, κ constants and Γ functionals.
//! - [`bounds`]: Berry–Esseen and moderate-deviation bound evaluators.
//! - [`mc`]: replication orchestration, tail/ratio curves with Clopper–Pearson
//!   intervals, Kolmogorov distance, rate regression.
//! - [`rng`]: counter-derived reproducible random streams.

pub mod bounds;
pub mod er;
pub mod error;
pub mod graph;
pub mod local;
pub mod mc;
pub mod normal;
pub mod rng;

pub use error::{Error, Result};
