//! Nonstationary stochastic multi-armed bandits.
//!
//! The crate is split into four layers:
//!
//! - [`env`]: drifting-reward environments with materialized mean tables,
//!   reward samplers (Bernoulli and two-sided generalized Pareto) and
//!   variation-budget measurement.
//! - [`estimators`]: plain, sliding-window, discounted and saturated
//!   (truncated) mean estimators.
//! - [`policies`]: UCB-family policies for drifting rewards (resetting,
//!   sliding-window and discounted variants, plus heavy-tail robust versions)
//!   and the baselines they are compared against, all behind [`Policy`].
//! - [`harness`]: seeded Monte-Carlo episodes and batches, regret
//!   statistics, horizon sweeps and empirical checks of the concentration
//!   bounds the policies rely on.
//!
//! Arms are indexed from `0`; time steps run from `1` to `T` inclusive.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod policies;

pub use env::{BudgetMeasure, EnvKind, EnvironmentSpec, NoiseModel, RewardSample, Variation};
pub use error::{Error, Result};
pub use harness::{
    BatchConfig, BatchOutcome, BoundCheckReport, SimulationTrace, StepRecord, SummaryStats,
};
pub use policies::{Policy, PolicyKind, PolicyParams, Problem};

/// Random stream used for every simulated quantity.
///
/// ChaCha8 has a documented, platform-independent output sequence and
/// supports independent streams per seed, which the harness uses to give
/// each policy its own reward and decision streams.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds a [`SimRng`] from a seed and stream id.
pub fn sim_rng(seed: u64, stream: u64) -> SimRng {
    use rand::SeedableRng;
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
