//! Arm-selection policies.
//!
//! Every policy implements [`Policy`]: `select(t)` returns an arm for time
//! `t` and `update(arm, reward)` feeds back the observed reward. Policies
//! are built for a [`Problem`] (arm count, horizon, variation budget) through
//! [`PolicyKind::build`]; [`PolicyState`] wraps a policy with the
//! reset/select/update lifecycle the harness drives.
//!
//! Conventions shared by all index policies:
//! - an arm with no observation in the active memory (epoch, window or
//!   discounted count) is played before any index comparison, lowest arm
//!   first;
//! - ties between equal indices go to the lowest arm.

mod baselines;
pub mod index;
mod ucb;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use baselines::{exp3_probabilities, exp3_step, Dts, Exp3, FixedArm, Oracle, UniformRandom};
pub use index::{
    ducb_index, gamma_discount, moss_index, psi, robust_admissible, robust_index, sw_moss_index,
    tau_epoch, ucb1_index,
};
pub use ucb::{DiscountedUcb, Moss, RobustMoss, SlidingWindowMoss, SlidingWindowRobustMoss, Ucb1};

use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::SimRng;

/// What a policy is tuned for.
#[derive(Clone, Debug)]
pub struct Problem {
    pub arms: usize,
    pub horizon: usize,
    /// Variation budget `V_T` used for tuning.
    pub budget: f64,
    /// Whether rewards are guaranteed to be in `[0, 1]`.
    pub unit_rewards: bool,
    /// Whether rewards are guaranteed to be in `{0, 1}`.
    pub binary_rewards: bool,
    /// Best arm at each time step, required by the oracle.
    pub best_arms: Option<Arc<[usize]>>,
}

impl Problem {
    /// Problem description of `env`, tuned with its documented budget.
    pub fn from_env(env: &EnvironmentSpec) -> Self {
        let bernoulli = env.noise().is_unit_bounded();
        Self {
            arms: env.arms(),
            horizon: env.horizon(),
            budget: env.tuning_budget(),
            unit_rewards: bernoulli,
            binary_rewards: bernoulli,
            best_arms: Some((1..=env.horizon()).map(|t| env.best_arm(t)).collect()),
        }
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }
}

/// Tunable parameters. Unset optional fields fall back to the documented
/// defaults derived from the problem.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    /// Sliding-window MOSS exploration scale, `> 1/2`.
    pub eta: f64,
    /// Discounted UCB exploration scale, `> 1/2`.
    pub xi: f64,
    /// Geometric base of the robust saturation blocks, `> 1`.
    pub a: f64,
    /// Robust confidence width, `psi(2 zeta / a) >= 2 a / zeta`.
    pub zeta: f64,
    pub exp3_gamma: Option<f64>,
    pub exp3s_alpha: Option<f64>,
    pub rexp3_batch: Option<usize>,
    pub dts_gamma: f64,
    /// Overrides the restart period / window length.
    pub tau: Option<usize>,
    /// Overrides the discount factor.
    pub gamma: Option<f64>,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            xi: 0.6,
            a: 1.1,
            zeta: 2.2,
            exp3_gamma: None,
            exp3s_alpha: None,
            rexp3_batch: None,
            dts_gamma: 0.95,
            tau: None,
            gamma: None,
        }
    }
}

impl PolicyParams {
    /// Checks every admissibility condition, naming the first violated one.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.5) {
            return Err(Error::config(format!("eta must exceed 1/2, got {}", self.eta)));
        }
        if !(self.xi > 0.5) {
            return Err(Error::config(format!("xi must exceed 1/2, got {}", self.xi)));
        }
        if !(self.a > 1.0) {
            return Err(Error::config(format!("a must exceed 1, got {}", self.a)));
        }
        if !(self.zeta > 0.0) {
            return Err(Error::config(format!("zeta must be positive, got {}", self.zeta)));
        }
        if !robust_admissible(self.a, self.zeta) {
            return Err(Error::config(format!(
                "zeta/a violate psi(2 zeta / a) >= 2 a / zeta: psi({:.4}) = {:.4} < {:.4}",
                2.0 * self.zeta / self.a,
                psi(2.0 * self.zeta / self.a),
                2.0 * self.a / self.zeta
            )));
        }
        if let Some(g) = self.exp3_gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::config(format!("exp3_gamma must lie in (0, 1], got {g}")));
            }
        }
        if let Some(alpha) = self.exp3s_alpha {
            if !(alpha >= 0.0) {
                return Err(Error::config(format!("exp3s_alpha must be non-negative, got {alpha}")));
            }
        }
        if self.rexp3_batch == Some(0) {
            return Err(Error::config("rexp3_batch must be at least 1"));
        }
        if !(self.dts_gamma > 0.0 && self.dts_gamma <= 1.0) {
            return Err(Error::config(format!("dts_gamma must lie in (0, 1], got {}", self.dts_gamma)));
        }
        if self.tau == Some(0) {
            return Err(Error::config("tau must be at least 1"));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::config(format!("gamma must lie in (0, 1), got {g}")));
            }
        }
        Ok(())
    }

    /// Restart period / window length for `problem`.
    pub fn tau_for(&self, problem: &Problem) -> Result<usize> {
        match self.tau {
            Some(tau) => Ok(tau),
            None => tau_epoch(problem.arms, problem.horizon, problem.budget),
        }
    }

    pub fn gamma_for(&self, problem: &Problem) -> Result<f64> {
        match self.gamma {
            Some(g) => Ok(g),
            None => gamma_discount(problem.arms, problem.horizon, problem.budget),
        }
    }
}

/// Every policy the crate provides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Plays the arm with the largest true mean.
    Oracle,
    UniformRandom,
    FixedArm(usize),
    Ucb1,
    Moss,
    /// Saturated-mean MOSS for heavy tails, stationary.
    RobustMoss,
    /// MOSS restarted every `tau` rounds.
    ResettingMoss,
    SlidingWindowMoss,
    DiscountedUcb,
    ResettingRobustMoss,
    SlidingWindowRobustMoss,
    Exp3,
    Rexp3,
    Exp3S,
    DiscountedThompson,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 15] = [
        PolicyKind::Oracle,
        PolicyKind::UniformRandom,
        PolicyKind::FixedArm(0),
        PolicyKind::Ucb1,
        PolicyKind::Moss,
        PolicyKind::RobustMoss,
        PolicyKind::ResettingMoss,
        PolicyKind::SlidingWindowMoss,
        PolicyKind::DiscountedUcb,
        PolicyKind::ResettingRobustMoss,
        PolicyKind::SlidingWindowRobustMoss,
        PolicyKind::Exp3,
        PolicyKind::Rexp3,
        PolicyKind::Exp3S,
        PolicyKind::DiscountedThompson,
    ];

    pub fn name(&self) -> String {
        match self {
            PolicyKind::FixedArm(k) => format!("fixed:{k}"),
            other => other.base_name().to_string(),
        }
    }

    fn base_name(&self) -> &'static str {
        match self {
            PolicyKind::Oracle => "oracle",
            PolicyKind::UniformRandom => "uniform",
            PolicyKind::FixedArm(_) => "fixed",
            PolicyKind::Ucb1 => "ucb1",
            PolicyKind::Moss => "moss",
            PolicyKind::RobustMoss => "robust-moss",
            PolicyKind::ResettingMoss => "r-moss",
            PolicyKind::SlidingWindowMoss => "sw-moss",
            PolicyKind::DiscountedUcb => "d-ucb",
            PolicyKind::ResettingRobustMoss => "r-rmoss",
            PolicyKind::SlidingWindowRobustMoss => "sw-rmoss",
            PolicyKind::Exp3 => "exp3",
            PolicyKind::Rexp3 => "rexp3",
            PolicyKind::Exp3S => "exp3s",
            PolicyKind::DiscountedThompson => "dts",
        }
    }

    /// Whether the policy consumes randomness when selecting.
    pub fn is_randomized(&self) -> bool {
        matches!(
            self,
            PolicyKind::UniformRandom
                | PolicyKind::Exp3
                | PolicyKind::Rexp3
                | PolicyKind::Exp3S
                | PolicyKind::DiscountedThompson
        )
    }

    /// One-line description with the parameters that apply, for listings.
    pub fn describe(&self, params: &PolicyParams) -> String {
        let p = params;
        let opt = |v: Option<f64>, default: &str| v.map_or(default.to_string(), |x| x.to_string());
        match self {
            PolicyKind::Oracle => "plays the best arm (regret 0)".into(),
            PolicyKind::UniformRandom => "uniform random arm".into(),
            PolicyKind::FixedArm(_) => "always plays one arm: fixed:<arm>".into(),
            PolicyKind::Ucb1 => "UCB1, stationary".into(),
            PolicyKind::Moss => "MOSS, stationary (horizon T)".into(),
            PolicyKind::RobustMoss => format!("robust MOSS, stationary; a={} zeta={}", p.a, p.zeta),
            PolicyKind::ResettingMoss => format!(
                "MOSS restarted every tau rounds; tau={}",
                p.tau.map_or("ceil(K^(1/3) (T/V_T)^(2/3))".into(), |t| t.to_string())
            ),
            PolicyKind::SlidingWindowMoss => format!(
                "MOSS over the last tau rounds; eta={} tau={}",
                p.eta,
                p.tau.map_or("ceil(K^(1/3) (T/V_T)^(2/3))".into(), |t| t.to_string())
            ),
            PolicyKind::DiscountedUcb => format!(
                "discounted UCB; xi={} gamma={}",
                p.xi,
                opt(p.gamma, "1 - K^(-1/3) (T/V_T)^(-2/3)")
            ),
            PolicyKind::ResettingRobustMoss => {
                format!("robust MOSS restarted every tau rounds; a={} zeta={}", p.a, p.zeta)
            }
            PolicyKind::SlidingWindowRobustMoss => {
                format!("robust MOSS over the last tau rounds; a={} zeta={}", p.a, p.zeta)
            }
            PolicyKind::Exp3 => format!(
                "Exp3; exp3_gamma={}",
                opt(p.exp3_gamma, "min(1, sqrt(K ln K / ((e-1) T)))")
            ),
            PolicyKind::Rexp3 => format!(
                "Exp3 restarted every batch; batch={} exp3_gamma={}",
                p.rexp3_batch
                    .map_or("ceil((K ln K)^(1/3) (T/V_T)^(2/3))".into(), |b| b.to_string()),
                opt(p.exp3_gamma, "min(1, sqrt(K ln K / ((e-1) batch)))")
            ),
            PolicyKind::Exp3S => format!(
                "Exp3.S; exp3_gamma={} exp3s_alpha={}",
                opt(p.exp3_gamma, "min(1, sqrt(K ln K / ((e-1) batch)))"),
                opt(p.exp3s_alpha, "1/T")
            ),
            PolicyKind::DiscountedThompson => {
                format!("discounted Thompson sampling (Beta posteriors); dts_gamma={}", p.dts_gamma)
            }
        }
    }

    /// Builds a freshly reset policy for `problem`.
    pub fn build(&self, params: &PolicyParams, problem: &Problem) -> Result<Box<dyn Policy>> {
        params.validate()?;
        if problem.arms < 2 || problem.horizon < problem.arms {
            return Err(Error::config(format!(
                "need K >= 2 and T >= K, got K={} T={}",
                problem.arms, problem.horizon
            )));
        }
        let k = problem.arms;
        let horizon = problem.horizon as f64;
        let policy: Box<dyn Policy> = match *self {
            PolicyKind::Oracle => {
                let best = problem.best_arms.clone().ok_or_else(|| {
                    Error::config("the oracle needs the environment's best-arm sequence")
                })?;
                Box::new(Oracle::new(best))
            }
            PolicyKind::UniformRandom => Box::new(UniformRandom::new(k)),
            PolicyKind::FixedArm(arm) => {
                if arm >= k {
                    return Err(Error::config(format!("fixed arm {arm} outside 0..{k}")));
                }
                Box::new(FixedArm::new(arm))
            }
            PolicyKind::Ucb1 => Box::new(Ucb1::new(k)),
            PolicyKind::Moss => Box::new(Moss::stationary(k, horizon)),
            PolicyKind::ResettingMoss => Box::new(Moss::resetting(k, params.tau_for(problem)?)),
            PolicyKind::SlidingWindowMoss => {
                Box::new(SlidingWindowMoss::new(k, params.tau_for(problem)?, params.eta)?)
            }
            PolicyKind::DiscountedUcb => {
                Box::new(DiscountedUcb::new(k, params.gamma_for(problem)?, params.xi)?)
            }
            PolicyKind::RobustMoss => {
                Box::new(RobustMoss::stationary(k, horizon, params.a, params.zeta)?)
            }
            PolicyKind::ResettingRobustMoss => Box::new(RobustMoss::resetting(
                k,
                params.tau_for(problem)?,
                params.a,
                params.zeta,
            )?),
            PolicyKind::SlidingWindowRobustMoss => Box::new(SlidingWindowRobustMoss::new(
                k,
                params.tau_for(problem)?,
                params.a,
                params.zeta,
            )?),
            PolicyKind::Exp3 | PolicyKind::Rexp3 | PolicyKind::Exp3S => {
                if !problem.unit_rewards {
                    return Err(Error::config(format!(
                        "{} needs rewards in [0, 1]; this environment is unbounded",
                        self.name()
                    )));
                }
                Box::new(Exp3::for_problem(*self, params, problem)?)
            }
            PolicyKind::DiscountedThompson => {
                if !problem.binary_rewards {
                    return Err(Error::config(
                        "dts needs Bernoulli rewards; this environment is not binary",
                    ));
                }
                Box::new(Dts::new(k, params.dts_gamma))
            }
        };
        Ok(policy)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(arm) = s.strip_prefix("fixed:") {
            let arm = arm
                .parse()
                .map_err(|_| Error::config(format!("bad arm in policy '{s}'")))?;
            return Ok(PolicyKind::FixedArm(arm));
        }
        PolicyKind::ALL
            .iter()
            .find(|k| !matches!(k, PolicyKind::FixedArm(_)) && k.base_name() == s)
            .copied()
            .ok_or_else(|| Error::config(format!("unknown policy '{s}'")))
    }
}

/// A bandit policy driven one round at a time.
pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    /// Forgets everything observed so far.
    fn reset(&mut self);

    /// Chooses the arm for round `t` (1-based). `rng` is the policy's own
    /// decision stream; deterministic policies ignore it.
    fn select(&mut self, t: usize, rng: &mut SimRng) -> Result<usize>;

    /// Records the reward observed for `arm` in the round just selected.
    fn update(&mut self, arm: usize, reward: f64) -> Result<()>;
}

/// A policy slot with an explicit lifecycle: nothing can be selected until
/// [`PolicyState::reset`] has built the policy for a problem.
pub struct PolicyState {
    kind: PolicyKind,
    params: PolicyParams,
    inner: Option<Box<dyn Policy>>,
    problem: Option<Problem>,
}

impl PolicyState {
    pub fn new(kind: PolicyKind, params: PolicyParams) -> Self {
        Self {
            kind,
            params,
            inner: None,
            problem: None,
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    /// The problem of the last successful reset.
    pub fn problem(&self) -> Option<&Problem> {
        self.problem.as_ref()
    }

    pub fn reset(&mut self, problem: &Problem) -> Result<()> {
        self.inner = Some(self.kind.build(&self.params, problem)?);
        self.problem = Some(problem.clone());
        Ok(())
    }

    pub fn select(&mut self, t: usize, rng: &mut SimRng) -> Result<usize> {
        self.policy()?.select(t, rng)
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.policy()?.update(arm, reward)
    }

    fn policy(&mut self) -> Result<&mut Box<dyn Policy>> {
        let kind = self.kind;
        self.inner
            .as_mut()
            .ok_or_else(|| Error::Usage(format!("{kind} used before reset")))
    }
}
