use rayon::prelude::*;

use super::episode::{simulate, StepRecord, Streams};
use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::policies::{PolicyKind, PolicyParams, PolicyState, Problem};

/// What to run on one environment.
#[derive(Clone, Debug)]
pub struct BatchConfig {
    pub policies: Vec<(PolicyKind, PolicyParams)>,
    pub reps: usize,
    pub base_seed: u64,
    /// Tuning budget; `None` uses the environment's.
    pub budget: Option<f64>,
    /// Worker threads. `1` runs on the calling thread.
    pub workers: usize,
    /// Keep every `s`-th trace step (and the last); `None` keeps no trace.
    pub thin: Option<usize>,
}

impl BatchConfig {
    pub fn new(policies: Vec<(PolicyKind, PolicyParams)>, reps: usize, base_seed: u64) -> Self {
        Self {
            policies,
            reps,
            base_seed,
            budget: None,
            workers: 1,
            thin: None,
        }
    }
}

/// Equal-width histogram of final regrets.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub const BINS: usize = 20;

    /// One bin when all values coincide.
    pub fn new(values: &[f64]) -> Self {
        let lower = values.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() || lower == upper {
            return Self {
                lower,
                upper,
                counts: vec![values.len() as u64],
            };
        }
        let mut counts = vec![0; Self::BINS];
        let width = (upper - lower) / Self::BINS as f64;
        for &v in values {
            let bin = (((v - lower) / width) as usize).min(Self::BINS - 1);
            counts[bin] += 1;
        }
        Self { lower, upper, counts }
    }
}

/// Final-regret statistics of one policy over all replications.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryStats {
    pub policy: String,
    pub env: String,
    pub horizon: usize,
    pub arms: usize,
    pub budget: f64,
    pub reps: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator; 0 for one replication).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub histogram: Histogram,
}

impl SummaryStats {
    pub fn std_err(&self) -> f64 {
        self.std / (self.reps as f64).sqrt()
    }
}

/// Linear-interpolation quantile of sorted data (`(n - 1) p` positions).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// A kept trace step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    /// Position of the policy in [`BatchConfig::policies`].
    pub policy: usize,
    pub rep: u64,
    pub step: StepRecord,
}

#[derive(Clone, Debug)]
pub struct BatchOutcome {
    pub summaries: Vec<SummaryStats>,
    /// `finals[p][r]`: final regret of policy `p` in replication `r`.
    pub finals: Vec<Vec<f64>>,
    /// Ordered by replication, then policy, then time.
    pub trace: Vec<TraceRow>,
}

/// Runs every configured policy for `reps` replications on `env`.
///
/// Replication `r` draws from seed `base_seed + r`; policy `p` uses streams
/// `2p` (rewards) and `2p + 1` (decisions) of that seed. Results do not
/// depend on the worker count.
pub fn run_batch(env: &EnvironmentSpec, config: &BatchConfig) -> Result<BatchOutcome> {
    if config.reps == 0 {
        return Err(Error::config("reps must be at least 1"));
    }
    if config.policies.is_empty() {
        return Err(Error::config("no policies to run"));
    }
    if config.workers == 0 {
        return Err(Error::config("workers must be at least 1"));
    }
    if config.thin == Some(0) {
        return Err(Error::config("trace stride must be at least 1"));
    }
    let mut problem = Problem::from_env(env);
    if let Some(b) = config.budget {
        problem = problem.with_budget(b);
    }
    // Fail before any simulation on inadmissible parameters.
    for (kind, params) in &config.policies {
        params.validate()?;
        kind.build(params, &problem)?;
    }

    let one = |r: usize| run_replication(env, config, &problem, r as u64);
    let per_rep: Vec<Result<(Vec<f64>, Vec<TraceRow>)>> = if config.workers == 1 {
        (0..config.reps).map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..config.reps).into_par_iter().map(one).collect())
    };

    let mut finals = vec![Vec::with_capacity(config.reps); config.policies.len()];
    let mut trace = Vec::new();
    for rep in per_rep {
        let (rep_finals, rows) = rep?;
        for (p, f) in rep_finals.into_iter().enumerate() {
            finals[p].push(f);
        }
        trace.extend(rows);
    }
    let summaries = config
        .policies
        .iter()
        .zip(&finals)
        .map(|((kind, _), values)| summarize(kind.name(), env, problem.budget, values))
        .collect();
    Ok(BatchOutcome {
        summaries,
        finals,
        trace,
    })
}

fn run_replication(
    env: &EnvironmentSpec,
    config: &BatchConfig,
    problem: &Problem,
    rep: u64,
) -> Result<(Vec<f64>, Vec<TraceRow>)> {
    let seed = config.base_seed.wrapping_add(rep);
    let horizon = env.horizon();
    let mut finals = Vec::with_capacity(config.policies.len());
    let mut rows = Vec::new();
    for (p, (kind, params)) in config.policies.iter().enumerate() {
        let mut state = PolicyState::new(*kind, params.clone());
        state.reset(problem)?;
        let mut streams = Streams::new(seed, p as u64);
        let final_regret = simulate(&mut state, env, &mut streams, |s| {
            if let Some(stride) = config.thin {
                if s.t % stride == 0 || s.t == horizon {
                    rows.push(TraceRow {
                        policy: p,
                        rep,
                        step: *s,
                    });
                }
            }
        })?;
        finals.push(final_regret);
    }
    Ok((finals, rows))
}

/// Summary of `values` (one final regret per replication).
pub fn summarize(policy: String, env: &EnvironmentSpec, budget: f64, values: &[f64]) -> SummaryStats {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mean, std) = mean_std(values);
    SummaryStats {
        policy,
        env: env.kind().name().to_string(),
        horizon: env.horizon(),
        arms: env.arms(),
        budget,
        reps: values.len(),
        mean,
        std,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        q05: quantile(&sorted, 0.05),
        q25: quantile(&sorted, 0.25),
        q50: quantile(&sorted, 0.50),
        q75: quantile(&sorted, 0.75),
        q95: quantile(&sorted, 0.95),
        histogram: Histogram::new(values),
    }
}
