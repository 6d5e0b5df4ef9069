//! Seeded Monte-Carlo experiments.
//!
//! Regret is pseudo-regret: the gap between the best true mean and the
//! chosen arm's true mean, summed over time.

mod batch;
pub mod bounds;
mod episode;
pub mod output;
mod sweep;

pub use batch::{
    mean_std, quantile, run_batch, summarize, BatchConfig, BatchOutcome, Histogram, SummaryStats, TraceRow,
};
pub use bounds::{
    robust_beta, robust_bound, sw_bound, verify_robust_bound, verify_sw_bound, BoundCheckReport, BoundGrid,
};
pub use episode::{run_episode, SimulationTrace, StepRecord};
pub use sweep::{loglog_slope, scaling_sweep, SweepConfig, SweepResult, SweepRow};
