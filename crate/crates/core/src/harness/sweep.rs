use rayon::prelude::*;

use super::batch::mean_std;
use super::episode::{simulate, Streams};
use crate::env::{EnvKind, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::policies::{PolicyKind, PolicyParams, PolicyState, Problem};

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub policy: PolicyKind,
    pub params: PolicyParams,
    pub horizons: Vec<usize>,
    pub budget: f64,
    pub arms: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub workers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub horizon: usize,
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub policy: PolicyKind,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln(mean regret)` against `ln T`; `None` when
    /// some mean regret is not positive.
    pub slope: Option<f64>,
}

/// Mean final regret on lower-bound switching environments of growing
/// horizon. Replication `r` uses seed `base_seed + r` for both the
/// environment's switching sequence and the reward/decision streams.
pub fn scaling_sweep(config: &SweepConfig) -> Result<SweepResult> {
    if config.horizons.len() < 3 {
        return Err(Error::config(format!(
            "a scaling sweep needs at least 3 horizons, got {}",
            config.horizons.len()
        )));
    }
    if config.reps == 0 || config.workers == 0 {
        return Err(Error::config("reps and workers must be at least 1"));
    }
    config.params.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;

    let mut rows = Vec::with_capacity(config.horizons.len());
    for &horizon in &config.horizons {
        let one = |r: usize| -> Result<f64> {
            let seed = config.base_seed.wrapping_add(r as u64);
            let kind = EnvKind::LowerBoundSwitching {
                budget: config.budget,
                seed,
            };
            let env = EnvironmentSpec::new(config.arms, horizon, kind)?;
            let mut state = PolicyState::new(config.policy, config.params.clone());
            state.reset(&Problem::from_env(&env))?;
            simulate(&mut state, &env, &mut Streams::new(seed, 0), |_| {})
        };
        let finals: Vec<f64> = if config.workers == 1 {
            (0..config.reps).map(one).collect::<Result<_>>()?
        } else {
            pool.install(|| (0..config.reps).into_par_iter().map(one).collect::<Result<_>>())?
        };
        let (mean, std) = mean_std(&finals);
        rows.push(SweepRow {
            horizon,
            mean,
            std_err: std / (finals.len() as f64).sqrt(),
        });
    }
    let slope = loglog_slope(&rows);
    Ok(SweepResult {
        policy: config.policy,
        rows,
        slope,
    })
}

/// Least-squares slope of `ln mean` on `ln horizon`.
pub fn loglog_slope(rows: &[SweepRow]) -> Option<f64> {
    if rows.len() < 2 || rows.iter().any(|r| !(r.mean > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.horizon as f64).ln(), r.mean.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}
