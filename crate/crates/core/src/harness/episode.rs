use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::policies::{PolicyKind, PolicyState};
use crate::{sim_rng, SimRng};

/// One simulated round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub arm: usize,
    pub reward: f64,
    /// `max_k mu_t^k - mu_t^arm`.
    pub inst_regret: f64,
    pub cum_regret: f64,
}

/// Full per-round record of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationTrace {
    pub policy: PolicyKind,
    pub replication: u64,
    pub steps: Vec<StepRecord>,
}

impl SimulationTrace {
    pub fn final_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cum_regret)
    }
}

/// Random streams of one policy within one replication.
pub(crate) struct Streams {
    pub reward: SimRng,
    pub decision: SimRng,
}

impl Streams {
    /// Streams `2 * slot` and `2 * slot + 1` of `seed`.
    pub fn new(seed: u64, slot: u64) -> Self {
        Self {
            reward: sim_rng(seed, 2 * slot),
            decision: sim_rng(seed, 2 * slot + 1),
        }
    }
}

/// Plays `policy` for the full horizon of `env`, calling `sink` on every
/// round, and returns the final pseudo-regret.
pub(crate) fn simulate(
    policy: &mut PolicyState,
    env: &EnvironmentSpec,
    streams: &mut Streams,
    mut sink: impl FnMut(&StepRecord),
) -> Result<f64> {
    check_dimensions(policy, env)?;
    let mut cum = 0.0;
    for t in 1..=env.horizon() {
        let arm = policy.select(t, &mut streams.decision)?;
        if arm >= env.arms() {
            return Err(Error::Index {
                what: "arm",
                index: arm,
                range: format!("0..{}", env.arms()),
            });
        }
        let reward = env.draw(arm, t, &mut streams.reward);
        policy.update(arm, reward)?;
        let inst = env.best_mean(t) - env.means_at(t)[arm];
        cum += inst;
        sink(&StepRecord {
            t,
            arm,
            reward,
            inst_regret: inst,
            cum_regret: cum,
        });
    }
    Ok(cum)
}

fn check_dimensions(policy: &PolicyState, env: &EnvironmentSpec) -> Result<()> {
    match policy.problem() {
        None => Err(Error::Usage(format!("{} used before reset", policy.kind()))),
        Some(p) if p.arms != env.arms() || p.horizon != env.horizon() => Err(Error::config(format!(
            "policy tuned for K={} T={} but environment has K={} T={}",
            p.arms,
            p.horizon,
            env.arms(),
            env.horizon()
        ))),
        Some(_) => Ok(()),
    }
}

/// Runs one episode with the streams of `seed` (reward stream 0, decision
/// stream 1). `policy` must have been reset for a problem matching `env`.
pub fn run_episode(policy: &mut PolicyState, env: &EnvironmentSpec, seed: u64) -> Result<SimulationTrace> {
    let mut steps = Vec::with_capacity(env.horizon());
    simulate(policy, env, &mut Streams::new(seed, 0), |s| steps.push(*s))?;
    Ok(SimulationTrace {
        policy: policy.kind(),
        replication: 0,
        steps,
    })
}
