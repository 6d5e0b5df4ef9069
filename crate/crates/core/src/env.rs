//! Nonstationary reward environments.
//!
//! An [`EnvironmentSpec`] materializes the full `K x T` table of arm means at
//! construction. Everything random about the mean schedule (Brownian paths,
//! switching best arms) is drawn once from the kind's own seed, so the table
//! is a pure function of the description. Reward noise is drawn later from a
//! caller-owned stream.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::sim_rng;

/// Relative slack allowed between a declared budget and the measured variation.
pub const BUDGET_TOLERANCE: f64 = 1e-6;

/// Reward noise around the scheduled mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    /// Reward is 1 with probability equal to the mean, else 0.
    Bernoulli,
    /// Mean plus `s * |nu|` with a fair random sign `s` and `|nu|` generalized
    /// Pareto with the given shape and scale.
    TwoSidedPareto { shape: f64, scale: f64 },
}

impl NoiseModel {
    /// Whether every reward lies in `[0, 1]`.
    pub fn is_unit_bounded(&self) -> bool {
        matches!(self, NoiseModel::Bernoulli)
    }

    /// `E[nu^2]` for the Pareto model, `None` when it is infinite.
    pub fn pareto_second_moment(&self) -> Option<f64> {
        match *self {
            NoiseModel::TwoSidedPareto { shape, scale } if shape < 0.5 => {
                Some(2.0 * scale * scale / ((1.0 - shape) * (1.0 - 2.0 * shape)))
            }
            _ => None,
        }
    }
}

/// Which variation measure an environment's budget refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetMeasure {
    /// `sum_t max_k |mu_{t+1}^k - mu_t^k|`.
    Sup,
    /// `max_k sum_t |mu_{t+1}^k - mu_t^k|`.
    MaxArm,
}

/// A mean change taking effect at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub t: usize,
    pub arm: usize,
    pub level: f64,
}

/// Description of a mean schedule.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvKind {
    /// Per-arm constant Bernoulli means.
    Constant { levels: Vec<f64> },
    /// Bernoulli means that change only at the listed jumps.
    PiecewiseJump { initial: Vec<f64>, jumps: Vec<Jump> },
    /// Per-arm Gaussian random walk reflected into `[lower, upper]`; the
    /// starting points are uniform on the same interval.
    BrownianBernoulli {
        step_sd: f64,
        lower: f64,
        upper: f64,
        seed: u64,
    },
    /// `offset + amplitude * sin(rate * pi * t + 2 pi (k + 1) / K)`, Bernoulli.
    SinusoidalBernoulli {
        offset: f64,
        amplitude: f64,
        rate: f64,
    },
    /// `amplitude * sin(rate * pi * t + 2 pi (k + 1) / K)` plus two-sided
    /// generalized Pareto noise.
    SinusoidalPareto {
        amplitude: f64,
        rate: f64,
        shape: f64,
        scale: f64,
    },
    /// Epoch-wise stationary environment whose unique best arm switches at
    /// every epoch boundary. See [`make_lower_bound_env`].
    LowerBoundSwitching { budget: f64, seed: u64 },
}

impl EnvKind {
    pub fn brownian_bernoulli(seed: u64) -> Self {
        EnvKind::BrownianBernoulli {
            step_sd: 0.002,
            lower: 0.1,
            upper: 0.9,
            seed,
        }
    }

    pub fn sinusoidal_bernoulli() -> Self {
        EnvKind::SinusoidalBernoulli {
            offset: 0.5,
            amplitude: 0.3,
            rate: 0.001,
        }
    }

    pub fn sinusoidal_pareto() -> Self {
        EnvKind::SinusoidalPareto {
            amplitude: 0.3,
            rate: 0.001,
            shape: 0.4,
            scale: 0.23,
        }
    }

    /// Short identifier used in configs and CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::Constant { .. } => "constant",
            EnvKind::PiecewiseJump { .. } => "piecewise-jump",
            EnvKind::BrownianBernoulli { .. } => "brownian-bernoulli",
            EnvKind::SinusoidalBernoulli { .. } => "sinusoidal-bernoulli",
            EnvKind::SinusoidalPareto { .. } => "sinusoidal-pareto",
            EnvKind::LowerBoundSwitching { .. } => "lower-bound-switching",
        }
    }

    pub fn noise(&self) -> NoiseModel {
        match *self {
            EnvKind::SinusoidalPareto { shape, scale, .. } => {
                NoiseModel::TwoSidedPareto { shape, scale }
            }
            _ => NoiseModel::Bernoulli,
        }
    }

    /// Measure the kind's budget is documented in.
    pub fn budget_measure(&self) -> BudgetMeasure {
        match self {
            EnvKind::SinusoidalBernoulli { .. } | EnvKind::SinusoidalPareto { .. } => {
                BudgetMeasure::MaxArm
            }
            _ => BudgetMeasure::Sup,
        }
    }
}

/// Layout of a lower-bound switching environment.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchingLayout {
    pub epoch_len: usize,
    pub gap: f64,
    /// Best arm of each epoch.
    pub best_arms: Vec<usize>,
}

/// Both variation measures of a mean table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Variation {
    pub sup: f64,
    pub max_arm: f64,
}

impl Variation {
    pub fn get(&self, measure: BudgetMeasure) -> f64 {
        match measure {
            BudgetMeasure::Sup => self.sup,
            BudgetMeasure::MaxArm => self.max_arm,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardSample {
    pub value: f64,
    pub arm: usize,
    pub t: usize,
}

/// A fully materialized nonstationary environment. Immutable once built.
#[derive(Clone, Debug)]
pub struct EnvironmentSpec {
    arms: usize,
    horizon: usize,
    kind: EnvKind,
    noise: NoiseModel,
    /// Row-major: row `t - 1` holds the `arms` means at time `t`.
    means: Vec<f64>,
    declared_budget: Option<f64>,
    layout: Option<SwitchingLayout>,
}

impl EnvironmentSpec {
    pub fn new(arms: usize, horizon: usize, kind: EnvKind) -> Result<Self> {
        if arms < 2 {
            return Err(Error::config(format!("K must be at least 2, got {arms}")));
        }
        if horizon < arms {
            return Err(Error::config(format!(
                "T must be at least K = {arms}, got {horizon}"
            )));
        }
        if let EnvKind::LowerBoundSwitching { budget, seed } = kind {
            let mut env = make_lower_bound_env(arms, horizon, budget, &mut sim_rng(seed, 0))?;
            env.kind = kind;
            return Ok(env);
        }

        let means = match &kind {
            EnvKind::Constant { levels } => {
                check_len("levels", levels.len(), arms)?;
                (0..horizon).flat_map(|_| levels.iter().copied()).collect()
            }
            EnvKind::PiecewiseJump { initial, jumps } => {
                check_len("initial", initial.len(), arms)?;
                piecewise_table(arms, horizon, initial, jumps)?
            }
            EnvKind::BrownianBernoulli {
                step_sd,
                lower,
                upper,
                seed,
            } => brownian_table(arms, horizon, *step_sd, *lower, *upper, *seed)?,
            EnvKind::SinusoidalBernoulli {
                offset,
                amplitude,
                rate,
            } => sinusoid_table(arms, horizon, *offset, *amplitude, *rate),
            EnvKind::SinusoidalPareto {
                amplitude,
                rate,
                shape,
                scale,
            } => {
                if !(*shape > 0.0 && *shape < 1.0) || *scale <= 0.0 {
                    return Err(Error::config(format!(
                        "Pareto noise needs shape in (0, 1) and scale > 0, got shape={shape} scale={scale}"
                    )));
                }
                sinusoid_table(arms, horizon, 0.0, *amplitude, *rate)
            }
            EnvKind::LowerBoundSwitching { .. } => unreachable!(),
        };

        Self::from_table(arms, horizon, kind, means, None)
    }

    fn from_table(
        arms: usize,
        horizon: usize,
        kind: EnvKind,
        means: Vec<f64>,
        layout: Option<SwitchingLayout>,
    ) -> Result<Self> {
        debug_assert_eq!(means.len(), arms * horizon);
        let noise = kind.noise();
        if let Some(bad) = means.iter().find(|m| !m.is_finite()) {
            return Err(Error::config(format!("non-finite mean {bad}")));
        }
        if noise == NoiseModel::Bernoulli {
            if let Some(bad) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                return Err(Error::config(format!(
                    "Bernoulli mean {bad} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            arms,
            horizon,
            kind,
            noise,
            means,
            declared_budget: None,
            layout,
        })
    }

    /// Attaches a declared budget, rejecting it when the measured variation
    /// (in the kind's documented measure) exceeds it.
    pub fn with_declared_budget(mut self, budget: f64) -> Result<Self> {
        if !(budget > 0.0) {
            return Err(Error::config(format!("budget must be positive, got {budget}")));
        }
        let measured = self.total_variation().get(self.budget_measure());
        if measured > budget * (1.0 + BUDGET_TOLERANCE) {
            return Err(Error::config(format!(
                "measured variation {measured} exceeds declared budget {budget}"
            )));
        }
        self.declared_budget = Some(budget);
        Ok(self)
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn kind(&self) -> &EnvKind {
        &self.kind
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn budget_measure(&self) -> BudgetMeasure {
        self.kind.budget_measure()
    }

    pub fn declared_budget(&self) -> Option<f64> {
        self.declared_budget
    }

    pub fn switching_layout(&self) -> Option<&SwitchingLayout> {
        self.layout.as_ref()
    }

    /// The budget policies should be tuned with: the declared budget when
    /// present, otherwise the measured variation in the documented measure.
    pub fn tuning_budget(&self) -> f64 {
        self.declared_budget
            .unwrap_or_else(|| self.total_variation().get(self.budget_measure()))
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm >= self.arms {
            return Err(Error::Index {
                what: "arm",
                index: arm,
                range: format!("0..{}", self.arms),
            });
        }
        Ok(())
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.horizon {
            return Err(Error::Index {
                what: "time step",
                index: t,
                range: format!("1..={}", self.horizon),
            });
        }
        Ok(())
    }

    pub fn mean_at(&self, arm: usize, t: usize) -> Result<f64> {
        self.check_arm(arm)?;
        self.check_t(t)?;
        Ok(self.means[(t - 1) * self.arms + arm])
    }

    /// All arm means at time `t`. Panics when `t` is out of range.
    pub fn means_at(&self, t: usize) -> &[f64] {
        let row = (t - 1) * self.arms;
        &self.means[row..row + self.arms]
    }

    /// Largest mean at time `t`.
    pub fn best_mean(&self, t: usize) -> f64 {
        self.means_at(t)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index arm attaining the largest mean at time `t`.
    pub fn best_arm(&self, t: usize) -> usize {
        argmax_first(self.means_at(t))
    }

    pub fn sample<R: Rng + ?Sized>(&self, arm: usize, t: usize, rng: &mut R) -> Result<RewardSample> {
        self.check_arm(arm)?;
        self.check_t(t)?;
        Ok(RewardSample {
            value: self.draw(arm, t, rng),
            arm,
            t,
        })
    }

    /// Unchecked sampling path used by the harness after validating
    /// dimensions once. Panics on out-of-range indices.
    pub fn draw<R: Rng + ?Sized>(&self, arm: usize, t: usize, rng: &mut R) -> f64 {
        let mean = self.means_at(t)[arm];
        draw_reward(self.noise, mean, rng)
    }

    pub fn total_variation(&self) -> Variation {
        let k = self.arms;
        let mut sup = 0.0;
        let mut per_arm = vec![0.0; k];
        // The t = T term vanishes since mu_{T+1} := mu_T.
        for pair in self.means.windows(2 * k).step_by(k) {
            let (now, next) = pair.split_at(k);
            let mut step_sup: f64 = 0.0;
            for ((acc, a), b) in per_arm.iter_mut().zip(now).zip(next) {
                let d = (b - a).abs();
                *acc += d;
                step_sup = step_sup.max(d);
            }
            sup += step_sup;
        }
        Variation {
            sup,
            max_arm: per_arm.into_iter().fold(0.0, f64::max),
        }
    }

    /// Writes the mean table as CSV with columns `t, arm, mean`.
    pub fn write_means_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "arm", "mean"])?;
        for t in 1..=self.horizon {
            for (arm, m) in self.means_at(t).iter().enumerate() {
                w.write_record([t.to_string(), arm.to_string(), m.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws one reward around `mean` under `noise`.
pub fn draw_reward<R: Rng + ?Sized>(noise: NoiseModel, mean: f64, rng: &mut R) -> f64 {
    match noise {
        NoiseModel::Bernoulli => {
            if rng.random::<f64>() < mean {
                1.0
            } else {
                0.0
            }
        }
        NoiseModel::TwoSidedPareto { shape, scale } => {
            let magnitude = pareto_magnitude(shape, scale, rng.random::<f64>());
            if rng.random::<bool>() {
                mean + magnitude
            } else {
                mean - magnitude
            }
        }
    }
}

/// Inverse CDF of the generalized Pareto distribution at `u` in `[0, 1)`.
pub fn pareto_magnitude(shape: f64, scale: f64, u: f64) -> f64 {
    scale * ((1.0 - u).powf(-shape) - 1.0) / shape
}

pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn check_len(what: &str, got: usize, arms: usize) -> Result<()> {
    if got != arms {
        return Err(Error::config(format!(
            "{what} has {got} entries, expected K = {arms}"
        )));
    }
    Ok(())
}

fn sinusoid_table(arms: usize, horizon: usize, offset: f64, amplitude: f64, rate: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(arms * horizon);
    for t in 1..=horizon {
        for k in 0..arms {
            let phase = 2.0 * PI * (k + 1) as f64 / arms as f64;
            out.push(offset + amplitude * (rate * PI * t as f64 + phase).sin());
        }
    }
    out
}

fn piecewise_table(arms: usize, horizon: usize, initial: &[f64], jumps: &[Jump]) -> Result<Vec<f64>> {
    let mut sorted = jumps.to_vec();
    sorted.sort_by_key(|j| j.t);
    for j in &sorted {
        if j.arm >= arms || j.t < 2 || j.t > horizon {
            return Err(Error::config(format!(
                "jump (t={}, arm={}) outside t in 2..={horizon}, arm in 0..{arms}",
                j.t, j.arm
            )));
        }
    }
    let mut current = initial.to_vec();
    let mut next = sorted.iter().peekable();
    let mut out = Vec::with_capacity(arms * horizon);
    for t in 1..=horizon {
        while let Some(j) = next.next_if(|j| j.t == t) {
            current[j.arm] = j.level;
        }
        out.extend_from_slice(&current);
    }
    Ok(out)
}

fn brownian_table(
    arms: usize,
    horizon: usize,
    step_sd: f64,
    lower: f64,
    upper: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(lower < upper) || step_sd <= 0.0 || step_sd >= upper - lower {
        return Err(Error::config(format!(
            "Brownian walk needs lower < upper and 0 < step_sd < upper - lower, got [{lower}, {upper}] sd={step_sd}"
        )));
    }
    let mut rng = sim_rng(seed, 0);
    let step = Normal::new(0.0, step_sd).map_err(|e| Error::config(e.to_string()))?;
    let mut current: Vec<f64> = (0..arms).map(|_| rng.random_range(lower..=upper)).collect();
    let mut out = Vec::with_capacity(arms * horizon);
    out.extend_from_slice(&current);
    for _ in 1..horizon {
        for x in current.iter_mut() {
            *x = reflect(*x + step.sample(&mut rng), lower, upper);
        }
        out.extend_from_slice(&current);
    }
    Ok(out)
}

fn reflect(mut x: f64, lower: f64, upper: f64) -> f64 {
    loop {
        if x > upper {
            x = 2.0 * upper - x;
        } else if x < lower {
            x = 2.0 * lower - x;
        } else {
            return x;
        }
    }
}

/// Epoch length `ceil(K^{1/3} (T / V_T)^{2/3})` shared by the switching
/// construction and the resetting/windowed policies.
pub fn switching_epoch_len(arms: usize, horizon: usize, budget: f64) -> usize {
    let raw = (arms as f64).cbrt() * (horizon as f64 / budget).powf(2.0 / 3.0);
    // Exact integers such as K^{1/3} K^{2/3} = K may land a hair above.
    let rounded = raw.round();
    if (raw - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Builds the minimax lower-bound environment: epochs of length
/// `tau = ceil(K^{1/3} (T/V_T)^{2/3})`, every arm at 0.5 except one best arm
/// at `0.5 + gap` with `gap = min(sqrt(K / tau), 0.5)`. The best arm is drawn
/// uniformly for the first epoch and redrawn uniformly among the other arms
/// at each boundary.
pub fn make_lower_bound_env<R: Rng + ?Sized>(
    arms: usize,
    horizon: usize,
    budget: f64,
    rng: &mut R,
) -> Result<EnvironmentSpec> {
    if arms < 2 || horizon < arms {
        return Err(Error::config(format!(
            "need K >= 2 and T >= K, got K={arms} T={horizon}"
        )));
    }
    let (lo, hi) = (1.0 / arms as f64, horizon as f64 / arms as f64);
    if !(budget >= lo && budget <= hi) {
        return Err(Error::config(format!(
            "lower-bound budget {budget} outside [1/K, T/K] = [{lo}, {hi}]"
        )));
    }
    let epoch_len = switching_epoch_len(arms, horizon, budget);
    let gap = (arms as f64 / epoch_len as f64).sqrt().min(0.5);
    let epochs = horizon.div_ceil(epoch_len);

    let mut best_arms = Vec::with_capacity(epochs);
    best_arms.push(rng.random_range(0..arms));
    for _ in 1..epochs {
        let prev = *best_arms.last().unwrap();
        let mut next = rng.random_range(0..arms - 1);
        if next >= prev {
            next += 1;
        }
        best_arms.push(next);
    }

    let mut means = Vec::with_capacity(arms * horizon);
    for t in 1..=horizon {
        let best = best_arms[(t - 1) / epoch_len];
        means.extend((0..arms).map(|k| if k == best { 0.5 + gap } else { 0.5 }));
    }
    let layout = SwitchingLayout {
        epoch_len,
        gap,
        best_arms,
    };
    let kind = EnvKind::LowerBoundSwitching { budget, seed: 0 };
    EnvironmentSpec::from_table(arms, horizon, kind, means, Some(layout))?.with_declared_budget(budget)
}
