//! Reference policies: the oracle, trivial baselines, the Exp3 family and
//! discounted Thompson sampling.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::{Policy, PolicyKind, PolicyParams, Problem};
use crate::env::argmax_first;
use crate::error::{Error, Result};
use crate::SimRng;

#[derive(Clone, Debug)]
pub struct Oracle {
    best: Arc<[usize]>,
}

impl Oracle {
    pub fn new(best: Arc<[usize]>) -> Self {
        Self { best }
    }
}

impl Policy for Oracle {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Oracle
    }

    fn reset(&mut self) {}

    fn select(&mut self, t: usize, _rng: &mut SimRng) -> Result<usize> {
        self.best.get(t.wrapping_sub(1)).copied().ok_or_else(|| Error::Index {
            what: "time step",
            index: t,
            range: format!("1..={}", self.best.len()),
        })
    }

    fn update(&mut self, _arm: usize, _reward: f64) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct UniformRandom {
    arms: usize,
}

impl UniformRandom {
    pub fn new(arms: usize) -> Self {
        Self { arms }
    }
}

impl Policy for UniformRandom {
    fn kind(&self) -> PolicyKind {
        PolicyKind::UniformRandom
    }

    fn reset(&mut self) {}

    fn select(&mut self, _t: usize, rng: &mut SimRng) -> Result<usize> {
        Ok(rng.random_range(0..self.arms))
    }

    fn update(&mut self, _arm: usize, _reward: f64) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FixedArm {
    arm: usize,
}

impl FixedArm {
    pub fn new(arm: usize) -> Self {
        Self { arm }
    }
}

impl Policy for FixedArm {
    fn kind(&self) -> PolicyKind {
        PolicyKind::FixedArm(self.arm)
    }

    fn reset(&mut self) {}

    fn select(&mut self, _t: usize, _rng: &mut SimRng) -> Result<usize> {
        Ok(self.arm)
    }

    fn update(&mut self, _arm: usize, _reward: f64) -> Result<()> {
        Ok(())
    }
}

/// `p_k = (1 - gamma) w_k / sum(w) + gamma / K`.
pub fn exp3_probabilities(weights: &[f64], gamma: f64) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let k = weights.len() as f64;
    weights
        .iter()
        .map(|w| (1.0 - gamma) * w / total + gamma / k)
        .collect()
}

/// One Exp3 / Exp3.S step: returns the probabilities the choice was drawn
/// from and the updated weights. With `alpha > 0` every weight additionally
/// receives `(e alpha / K) sum_j w_j` (Exp3.S sharing).
pub fn exp3_step(
    weights: &[f64],
    reward: f64,
    chosen: usize,
    gamma: f64,
    alpha: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..=1.0).contains(&reward) {
        return Err(Error::domain(format!("Exp3 rewards must lie in [0, 1], got {reward}")));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::domain("Exp3 weights must be positive and finite"));
    }
    let probs = exp3_probabilities(weights, gamma);
    let k = weights.len() as f64;
    let estimate = reward / probs[chosen];
    let share = std::f64::consts::E * alpha / k * weights.iter().sum::<f64>();
    let mut next: Vec<f64> = weights.iter().map(|w| w + share).collect();
    next[chosen] = weights[chosen] * (gamma * estimate / k).exp() + share;
    // Rescaling leaves the probabilities (and the sharing term) unchanged.
    let max = next.iter().copied().fold(0.0, f64::max);
    next.iter_mut().for_each(|w| *w /= max);
    Ok((probs, next))
}

/// Exp3, optionally restarted every `batch` rounds (Rexp3) or with weight
/// sharing `alpha` (Exp3.S).
#[derive(Clone, Debug)]
pub struct Exp3 {
    kind: PolicyKind,
    gamma: f64,
    alpha: f64,
    batch: Option<usize>,
    weights: Vec<f64>,
}

impl Exp3 {
    pub fn new(kind: PolicyKind, arms: usize, gamma: f64, alpha: f64, batch: Option<usize>) -> Self {
        Self {
            kind,
            gamma,
            alpha,
            batch,
            weights: vec![1.0; arms],
        }
    }

    /// Default tuning: batch `ceil((K ln K)^{1/3} (T/V_T)^{2/3})`, mixing
    /// `min(1, sqrt(K ln K / ((e - 1) L)))` with `L` the batch length (the
    /// horizon for plain Exp3) and sharing `alpha = 1/T`.
    pub fn for_problem(kind: PolicyKind, params: &PolicyParams, problem: &Problem) -> Result<Self> {
        let k = problem.arms as f64;
        let horizon = problem.horizon as f64;
        let klnk = k * k.ln();
        let batch = || -> Result<usize> {
            if let Some(b) = params.rexp3_batch {
                return Ok(b);
            }
            if !(problem.budget > 0.0) {
                return Err(Error::config(format!(
                    "{kind} needs a positive variation budget, got {}",
                    problem.budget
                )));
            }
            Ok((klnk.cbrt() * (horizon / problem.budget).powf(2.0 / 3.0)).ceil() as usize)
        };
        let mixing = |len: f64| {
            params
                .exp3_gamma
                .unwrap_or_else(|| (klnk / ((std::f64::consts::E - 1.0) * len)).sqrt().min(1.0))
        };
        Ok(match kind {
            PolicyKind::Exp3 => Self::new(kind, problem.arms, mixing(horizon), 0.0, None),
            PolicyKind::Rexp3 => {
                let b = batch()?;
                Self::new(kind, problem.arms, mixing(b as f64), 0.0, Some(b))
            }
            PolicyKind::Exp3S => {
                let b = batch()?;
                let alpha = params.exp3s_alpha.unwrap_or(1.0 / horizon);
                Self::new(kind, problem.arms, mixing(b as f64), alpha, None)
            }
            other => return Err(Error::config(format!("{other} is not an Exp3 variant"))),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn batch(&self) -> Option<usize> {
        self.batch
    }

    pub fn probabilities(&self) -> Vec<f64> {
        exp3_probabilities(&self.weights, self.gamma)
    }
}

impl Policy for Exp3 {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn reset(&mut self) {
        self.weights.fill(1.0);
    }

    fn select(&mut self, t: usize, rng: &mut SimRng) -> Result<usize> {
        if self.batch.is_some_and(|b| (t - 1) % b == 0) {
            self.reset();
        }
        let probs = self.probabilities();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(k);
            }
        }
        Ok(probs.len() - 1)
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.weights.len() {
            return Err(Error::Index {
                what: "arm",
                index: arm,
                range: format!("0..{}", self.weights.len()),
            });
        }
        let (_, next) = exp3_step(&self.weights, reward, arm, self.gamma, self.alpha)?;
        self.weights = next;
        Ok(())
    }
}

/// Discounted Thompson sampling with Beta posteriors on Bernoulli arms.
#[derive(Clone, Debug)]
pub struct Dts {
    gamma: f64,
    successes: Vec<f64>,
    failures: Vec<f64>,
}

impl Dts {
    pub fn new(arms: usize, gamma: f64) -> Self {
        Self {
            gamma,
            successes: vec![0.0; arms],
            failures: vec![0.0; arms],
        }
    }

    /// Posterior `Beta(successes + 1, failures + 1)` parameters of `arm`.
    pub fn posterior(&self, arm: usize) -> (f64, f64) {
        (self.successes[arm] + 1.0, self.failures[arm] + 1.0)
    }
}

impl Policy for Dts {
    fn kind(&self) -> PolicyKind {
        PolicyKind::DiscountedThompson
    }

    fn reset(&mut self) {
        self.successes.fill(0.0);
        self.failures.fill(0.0);
    }

    fn select(&mut self, _t: usize, rng: &mut SimRng) -> Result<usize> {
        let draws = (0..self.successes.len())
            .map(|k| {
                let (a, b) = self.posterior(k);
                Beta::new(a, b)
                    .map(|d| d.sample(rng))
                    .map_err(|e| Error::domain(format!("Beta({a}, {b}): {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(argmax_first(&draws))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if reward != 0.0 && reward != 1.0 {
            return Err(Error::domain(format!("DTS needs rewards in {{0, 1}}, got {reward}")));
        }
        if arm >= self.successes.len() {
            return Err(Error::Index {
                what: "arm",
                index: arm,
                range: format!("0..{}", self.successes.len()),
            });
        }
        for (s, f) in self.successes.iter_mut().zip(self.failures.iter_mut()) {
            *s *= self.gamma;
            *f *= self.gamma;
        }
        self.successes[arm] += reward;
        self.failures[arm] += 1.0 - reward;
        Ok(())
    }
}
