use super::index::{ducb_index, moss_index, robust_index, select_by_index, sw_moss_index, ucb1_index};
use super::{Policy, PolicyKind};
use crate::error::{Error, Result};
use crate::estimators::{ArmStats, DiscountedStats, SaturatedStats, WindowStats, WindowedSaturatedStats};
use crate::SimRng;

fn check_arm(arm: usize, arms: usize) -> Result<()> {
    if arm >= arms {
        return Err(Error::Index {
            what: "arm",
            index: arm,
            range: format!("0..{arms}"),
        });
    }
    Ok(())
}

/// `true` when round `t` opens a new restart period.
fn starts_epoch(t: usize, period: Option<usize>) -> bool {
    period.is_some_and(|p| (t - 1) % p == 0)
}

#[derive(Clone, Debug)]
pub struct Ucb1 {
    stats: ArmStats,
}

impl Ucb1 {
    pub fn new(arms: usize) -> Self {
        Self {
            stats: ArmStats::new(arms),
        }
    }
}

impl Policy for Ucb1 {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Ucb1
    }

    fn reset(&mut self) {
        self.stats.clear();
    }

    fn select(&mut self, t: usize, _rng: &mut SimRng) -> Result<usize> {
        let s = &self.stats;
        Ok(select_by_index(
            s.arms(),
            |k| s.count(k) == 0,
            |k| ucb1_index(s.mean(k).unwrap_or(0.0), s.count(k), t as f64),
        ))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.stats.arms())?;
        self.stats.push(arm, reward)
    }
}

/// MOSS, optionally restarted every `period` rounds. A restarted run uses
/// the period as its horizon.
#[derive(Clone, Debug)]
pub struct Moss {
    stats: ArmStats,
    horizon: f64,
    period: Option<usize>,
}

impl Moss {
    pub fn stationary(arms: usize, horizon: f64) -> Self {
        Self {
            stats: ArmStats::new(arms),
            horizon,
            period: None,
        }
    }

    pub fn resetting(arms: usize, period: usize) -> Self {
        Self {
            stats: ArmStats::new(arms),
            horizon: period as f64,
            period: Some(period),
        }
    }
}

impl Policy for Moss {
    fn kind(&self) -> PolicyKind {
        if self.period.is_some() {
            PolicyKind::ResettingMoss
        } else {
            PolicyKind::Moss
        }
    }

    fn reset(&mut self) {
        self.stats.clear();
    }

    fn select(&mut self, t: usize, _rng: &mut SimRng) -> Result<usize> {
        if starts_epoch(t, self.period) {
            self.stats.clear();
        }
        let s = &self.stats;
        let k = s.arms();
        Ok(select_by_index(
            k,
            |a| s.count(a) == 0,
            |a| moss_index(s.mean(a).unwrap_or(0.0), s.count(a), self.horizon, k),
        ))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.stats.arms())?;
        self.stats.push(arm, reward)
    }
}

/// MOSS over the last `tau` rounds with exploration scale `eta`.
#[derive(Clone, Debug)]
pub struct SlidingWindowMoss {
    arms: usize,
    window: WindowStats,
    eta: f64,
}

impl SlidingWindowMoss {
    pub fn new(arms: usize, tau: usize, eta: f64) -> Result<Self> {
        Ok(Self {
            arms,
            window: WindowStats::new(arms, tau)?,
            eta,
        })
    }

    pub fn window(&self) -> &WindowStats {
        &self.window
    }
}

impl Policy for SlidingWindowMoss {
    fn kind(&self) -> PolicyKind {
        PolicyKind::SlidingWindowMoss
    }

    fn reset(&mut self) {
        self.window.clear();
    }

    fn select(&mut self, _t: usize, _rng: &mut SimRng) -> Result<usize> {
        let w = &self.window;
        let tau = w.capacity() as f64;
        Ok(select_by_index(
            self.arms,
            |a| w.count(a) == 0,
            |a| sw_moss_index(w.mean(a).unwrap_or(0.0), w.count(a), tau, self.arms, self.eta),
        ))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.arms)?;
        self.window.push(arm, reward).map(|_| ())
    }
}

/// Discounted UCB. The log term uses the effective memory `1 / (1 - gamma)`.
#[derive(Clone, Debug)]
pub struct DiscountedUcb {
    arms: usize,
    stats: DiscountedStats,
    xi: f64,
    tau_eff: f64,
}

impl DiscountedUcb {
    pub fn new(arms: usize, gamma: f64, xi: f64) -> Result<Self> {
        Ok(Self {
            arms,
            stats: DiscountedStats::new(arms, gamma)?,
            xi,
            tau_eff: 1.0 / (1.0 - gamma),
        })
    }

    pub fn stats(&self) -> &DiscountedStats {
        &self.stats
    }
}

impl Policy for DiscountedUcb {
    fn kind(&self) -> PolicyKind {
        PolicyKind::DiscountedUcb
    }

    fn reset(&mut self) {
        self.stats.clear();
    }

    fn select(&mut self, _t: usize, _rng: &mut SimRng) -> Result<usize> {
        let s = &self.stats;
        Ok(select_by_index(
            self.arms,
            |a| !(s.count(a) > 0.0),
            |a| ducb_index(s.mean(a).unwrap_or(0.0), s.count(a), self.tau_eff, self.xi),
        ))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.arms)?;
        if !reward.is_finite() {
            return Err(Error::domain(format!("reward {reward} is not finite")));
        }
        self.stats.step(arm, reward);
        Ok(())
    }
}

/// Robust MOSS on saturated means, optionally restarted every `period`
/// rounds (then the period is the horizon scale of both the saturation
/// limit and the confidence width).
#[derive(Clone, Debug)]
pub struct RobustMoss {
    stats: SaturatedStats,
    horizon_scale: f64,
    zeta: f64,
    period: Option<usize>,
}

impl RobustMoss {
    pub fn stationary(arms: usize, horizon: f64, a: f64, zeta: f64) -> Result<Self> {
        Ok(Self {
            stats: SaturatedStats::new(arms, a, horizon)?,
            horizon_scale: horizon,
            zeta,
            period: None,
        })
    }

    pub fn resetting(arms: usize, period: usize, a: f64, zeta: f64) -> Result<Self> {
        let scale = period as f64;
        Ok(Self {
            stats: SaturatedStats::new(arms, a, scale)?,
            horizon_scale: scale,
            zeta,
            period: Some(period),
        })
    }
}

impl Policy for RobustMoss {
    fn kind(&self) -> PolicyKind {
        if self.period.is_some() {
            PolicyKind::ResettingRobustMoss
        } else {
            PolicyKind::RobustMoss
        }
    }

    fn reset(&mut self) {
        self.stats.clear();
    }

    fn select(&mut self, t: usize, _rng: &mut SimRng) -> Result<usize> {
        if starts_epoch(t, self.period) {
            self.stats.clear();
        }
        let s = &self.stats;
        let k = s.arms();
        Ok(select_by_index(
            k,
            |a| s.count(a) == 0,
            |a| robust_index(s.mean(a).unwrap_or(0.0), s.count(a), self.horizon_scale, k, self.zeta),
        ))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.stats.arms())?;
        self.stats.push(arm, reward)
    }
}

/// Robust MOSS over the last `tau` rounds; `tau` is also the horizon scale.
#[derive(Clone, Debug)]
pub struct SlidingWindowRobustMoss {
    arms: usize,
    stats: WindowedSaturatedStats,
    tau: f64,
    zeta: f64,
}

impl SlidingWindowRobustMoss {
    pub fn new(arms: usize, tau: usize, a: f64, zeta: f64) -> Result<Self> {
        Ok(Self {
            arms,
            stats: WindowedSaturatedStats::new(arms, tau, a, tau as f64)?,
            tau: tau as f64,
            zeta,
        })
    }
}

impl Policy for SlidingWindowRobustMoss {
    fn kind(&self) -> PolicyKind {
        PolicyKind::SlidingWindowRobustMoss
    }

    fn reset(&mut self) {
        self.stats.clear();
    }

    fn select(&mut self, _t: usize, _rng: &mut SimRng) -> Result<usize> {
        let s = &self.stats;
        Ok(select_by_index(
            self.arms,
            |a| s.count(a) == 0,
            |a| robust_index(s.mean(a).unwrap_or(0.0), s.count(a), self.tau, self.arms, self.zeta),
        ))
    }

    fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.arms)?;
        self.stats.push(arm, reward)
    }
}
