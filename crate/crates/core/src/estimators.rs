//! Mean estimators shared by the policies.
//!
//! Sums that must support removal (sliding windows) are kept in a fixed-point
//! [`ExactSum`], so evicting a sample restores exactly the state a fresh
//! recomputation would produce. Append-only saturated sums stay in `f64`
//! and are accumulated in sample order, which makes them bit-identical to a
//! from-scratch evaluation of the same order.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// `max(ln x, 1)`.
pub fn ln_plus(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("ln_plus needs x > 0, got {x}")));
    }
    Ok(x.ln().max(1.0))
}

/// `floor(log_a m)`, computed so that `a^j <= m < a^(j+1)` holds for the
/// floating-point powers actually used by [`h`].
pub fn block_exponent(m: u64, a: f64) -> i32 {
    debug_assert!(m >= 1 && a > 1.0);
    let m = m as f64;
    let mut j = (m.ln() / a.ln()).floor() as i32;
    while a.powi(j + 1) <= m {
        j += 1;
    }
    while a.powi(j) > m {
        j -= 1;
    }
    j
}

/// `a^(floor(log_a m) + 1)`: the geometric block ceiling above `m`.
pub fn h(m: u64, a: f64) -> f64 {
    a.powi(block_exponent(m, a) + 1)
}

/// Saturation limit `B_n = sqrt(h(n) / ln_+(H / (K h(n))))`, where `H` is the
/// horizon the exploration bonus is scaled by (the full horizon for a
/// stationary run, the epoch or window length otherwise).
pub fn saturation_limit(n: u64, horizon_scale: f64, arms: usize, a: f64) -> f64 {
    let hn = h(n, a);
    let denom = (horizon_scale / (arms as f64 * hn)).ln().max(1.0);
    (hn / denom).sqrt()
}

/// `sign(x) * min(|x|, limit)`.
pub fn sat(x: f64, limit: f64) -> f64 {
    x.clamp(-limit, limit)
}

/// `(1/n) sum_i sat(x_i, limit)`.
pub fn saturated_mean(samples: &[f64], limit: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("saturated mean of an empty sample"));
    }
    let sum: f64 = samples.iter().map(|&x| sat(x, limit)).sum();
    Ok(sum / samples.len() as f64)
}

const FIXED_SCALE: f64 = 18446744073709551616.0; // 2^64
const FIXED_MAX_ABS: f64 = 4611686018427387904.0; // 2^62

/// Fixed-point accumulator with 64 fractional bits.
///
/// Additions and removals are exact integer operations, so any sequence of
/// `add`/`remove` leaves the same value as summing the surviving terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExactSum(i128);

impl ExactSum {
    /// Quantizes `x` onto the fixed-point grid.
    pub fn quantize(x: f64) -> Result<i128> {
        if !x.is_finite() || x.abs() >= FIXED_MAX_ABS {
            return Err(Error::domain(format!("reward {x} is not representable")));
        }
        Ok((x * FIXED_SCALE).round() as i128)
    }

    pub fn add(&mut self, q: i128) {
        self.0 += q;
    }

    pub fn remove(&mut self, q: i128) {
        self.0 -= q;
    }

    pub fn raw(&self) -> i128 {
        self.0
    }

    pub fn value(&self) -> f64 {
        self.0 as f64 / FIXED_SCALE
    }
}

/// Per-arm counts and exact sums over all observations since the last reset.
#[derive(Clone, Debug)]
pub struct ArmStats {
    counts: Vec<u64>,
    sums: Vec<ExactSum>,
}

impl ArmStats {
    pub fn new(arms: usize) -> Self {
        Self {
            counts: vec![0; arms],
            sums: vec![ExactSum::default(); arms],
        }
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn push(&mut self, arm: usize, reward: f64) -> Result<()> {
        let q = ExactSum::quantize(reward)?;
        self.counts[arm] += 1;
        self.sums[arm].add(q);
        Ok(())
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        match self.counts[arm] {
            0 => None,
            n => Some(self.sums[arm].value() / n as f64),
        }
    }

    pub fn clear(&mut self) {
        self.counts.fill(0);
        self.sums.fill(ExactSum::default());
    }
}

/// Statistics over the most recent `capacity` observations.
#[derive(Clone, Debug)]
pub struct WindowStats {
    capacity: usize,
    buffer: VecDeque<(usize, f64, i128)>,
    counts: Vec<u64>,
    sums: Vec<ExactSum>,
}

impl WindowStats {
    pub fn new(arms: usize, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("window capacity must be at least 1"));
        }
        Ok(Self {
            capacity,
            buffer: VecDeque::with_capacity(capacity + 1),
            counts: vec![0; arms],
            sums: vec![ExactSum::default(); arms],
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// Appends an observation, evicting the oldest one when full. Returns the
    /// evicted `(arm, reward)` pair.
    pub fn push(&mut self, arm: usize, reward: f64) -> Result<Option<(usize, f64)>> {
        let q = ExactSum::quantize(reward)?;
        self.buffer.push_back((arm, reward, q));
        self.counts[arm] += 1;
        self.sums[arm].add(q);
        if self.buffer.len() > self.capacity {
            let (old_arm, old_reward, old_q) = self.buffer.pop_front().expect("non-empty");
            self.counts[old_arm] -= 1;
            self.sums[old_arm].remove(old_q);
            return Ok(Some((old_arm, old_reward)));
        }
        Ok(None)
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn sum(&self, arm: usize) -> ExactSum {
        self.sums[arm]
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        match self.counts[arm] {
            0 => None,
            n => Some(self.sums[arm].value() / n as f64),
        }
    }

    /// Rewards currently in the window, oldest first.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.buffer.iter().map(|&(arm, x, _)| (arm, x))
    }

    /// Counts and sums recomputed from the buffer. Verification only.
    pub fn recomputed(&self) -> (Vec<u64>, Vec<ExactSum>) {
        let mut counts = vec![0; self.counts.len()];
        let mut sums = vec![ExactSum::default(); self.counts.len()];
        for &(arm, _, q) in &self.buffer {
            counts[arm] += 1;
            sums[arm].add(q);
        }
        (counts, sums)
    }

    pub fn clear(&mut self) {
        self.buffer.clear();
        self.counts.fill(0);
        self.sums.fill(ExactSum::default());
    }
}

/// Geometrically discounted counts and means.
///
/// The stored weight gives the latest observation weight 1, which is what the
/// recursive update maintains; [`DiscountedStats::count`] reports the
/// discounted count `sum_s gamma^(t-s) 1{arm_s = k}` as seen at the next
/// decision `t`, i.e. one more factor of `gamma`. Means are unaffected by the
/// common factor.
#[derive(Clone, Debug)]
pub struct DiscountedStats {
    gamma: f64,
    weights: Vec<f64>,
    means: Vec<f64>,
}

impl DiscountedStats {
    pub fn new(arms: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::config(format!("discount must lie in (0, 1), got {gamma}")));
        }
        Ok(Self {
            gamma,
            weights: vec![0.0; arms],
            means: vec![0.0; arms],
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Decays every arm, then folds `reward` into `chosen`.
    pub fn step(&mut self, chosen: usize, reward: f64) {
        for w in &mut self.weights {
            *w *= self.gamma;
        }
        let w = &mut self.weights[chosen];
        *w += 1.0;
        let m = &mut self.means[chosen];
        *m += (reward - *m) / *w;
    }

    /// Discounted count at the next decision.
    pub fn count(&self, arm: usize) -> f64 {
        self.gamma * self.weights[arm]
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.weights[arm] > 0.0).then_some(self.means[arm])
    }

    pub fn clear(&mut self) {
        self.weights.fill(0.0);
        self.means.fill(0.0);
    }
}

#[derive(Clone, Copy, Debug)]
struct BlockCache {
    exponent: i32,
    limit: f64,
    sum: f64,
}

/// Saturated means over every observation since the last reset.
///
/// The limit `B_n` only changes when `n` crosses into a new geometric block,
/// so the saturated sum is extended in O(1) within a block and recomputed
/// from the stored samples at block boundaries.
#[derive(Clone, Debug)]
pub struct SaturatedStats {
    base: f64,
    horizon_scale: f64,
    samples: Vec<Vec<f64>>,
    cache: Vec<Option<BlockCache>>,
}

impl SaturatedStats {
    pub fn new(arms: usize, base: f64, horizon_scale: f64) -> Result<Self> {
        if !(base > 1.0) {
            return Err(Error::config(format!("geometric base a must exceed 1, got {base}")));
        }
        Ok(Self {
            base,
            horizon_scale,
            samples: vec![Vec::new(); arms],
            cache: vec![None; arms],
        })
    }

    pub fn arms(&self) -> usize {
        self.samples.len()
    }

    pub fn push(&mut self, arm: usize, reward: f64) -> Result<()> {
        if !reward.is_finite() {
            return Err(Error::domain(format!("reward {reward} is not finite")));
        }
        let arms = self.samples.len();
        let xs = &mut self.samples[arm];
        xs.push(reward);
        let n = xs.len() as u64;
        let exponent = block_exponent(n, self.base);
        match &mut self.cache[arm] {
            Some(c) if c.exponent == exponent => c.sum += sat(reward, c.limit),
            slot => {
                let limit = saturation_limit(n, self.horizon_scale, arms, self.base);
                let sum = xs.iter().map(|&x| sat(x, limit)).sum();
                *slot = Some(BlockCache { exponent, limit, sum });
            }
        }
        Ok(())
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.samples[arm].len() as u64
    }

    pub fn limit(&self, arm: usize) -> Option<f64> {
        self.cache[arm].map(|c| c.limit)
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        let c = self.cache[arm]?;
        Some(c.sum / self.samples[arm].len() as f64)
    }

    /// The saturated mean evaluated from scratch. Verification only.
    pub fn naive_mean(&self, arm: usize) -> Option<f64> {
        let xs = &self.samples[arm];
        if xs.is_empty() {
            return None;
        }
        let limit = saturation_limit(xs.len() as u64, self.horizon_scale, self.samples.len(), self.base);
        saturated_mean(xs, limit).ok()
    }

    pub fn samples(&self, arm: usize) -> &[f64] {
        &self.samples[arm]
    }

    pub fn clear(&mut self) {
        self.samples.iter_mut().for_each(Vec::clear);
        self.cache.fill(None);
    }
}

#[derive(Clone, Debug, Default)]
struct ArmWindow {
    samples: VecDeque<f64>,
    exponent: Option<i32>,
    limit: f64,
    sum: ExactSum,
}

/// Saturated means over a sliding window of the last `capacity` rounds.
///
/// In a window the per-arm count can shrink as well as grow, so the cached
/// sum of saturated values is kept exact ([`ExactSum`]) for removals and is
/// rebuilt whenever the count moves to a different geometric block.
#[derive(Clone, Debug)]
pub struct WindowedSaturatedStats {
    capacity: usize,
    base: f64,
    horizon_scale: f64,
    order: VecDeque<usize>,
    arms: Vec<ArmWindow>,
}

impl WindowedSaturatedStats {
    pub fn new(arms: usize, capacity: usize, base: f64, horizon_scale: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("window capacity must be at least 1"));
        }
        if !(base > 1.0) {
            return Err(Error::config(format!("geometric base a must exceed 1, got {base}")));
        }
        Ok(Self {
            capacity,
            base,
            horizon_scale,
            order: VecDeque::with_capacity(capacity + 1),
            arms: vec![ArmWindow::default(); arms],
        })
    }

    pub fn push(&mut self, arm: usize, reward: f64) -> Result<()> {
        if !reward.is_finite() {
            return Err(Error::domain(format!("reward {reward} is not finite")));
        }
        self.order.push_back(arm);
        self.arms[arm].samples.push_back(reward);
        let evicted = if self.order.len() > self.capacity {
            let old = self.order.pop_front().expect("non-empty");
            let x = self.arms[old].samples.pop_front().expect("arm holds the evicted sample");
            Some((old, x))
        } else {
            None
        };

        match evicted {
            Some((old, x)) if old == arm => self.refresh(arm, Some(reward), Some(x))?,
            Some((old, x)) => {
                self.refresh(old, None, Some(x))?;
                self.refresh(arm, Some(reward), None)?;
            }
            None => self.refresh(arm, Some(reward), None)?,
        }
        Ok(())
    }

    /// Brings `arm`'s cached sum in line with its window after one sample was
    /// added or removed. Rebuilds when the block changes.
    fn refresh(&mut self, arm: usize, added: Option<f64>, removed: Option<f64>) -> Result<()> {
        let k = self.arms.len();
        let (base, scale) = (self.base, self.horizon_scale);
        let w = &mut self.arms[arm];
        let n = w.samples.len() as u64;
        if n == 0 {
            w.exponent = None;
            w.sum = ExactSum::default();
            return Ok(());
        }
        let exponent = block_exponent(n, base);
        if w.exponent == Some(exponent) {
            if let Some(x) = added {
                w.sum.add(ExactSum::quantize(sat(x, w.limit))?);
            }
            if let Some(x) = removed {
                w.sum.remove(ExactSum::quantize(sat(x, w.limit))?);
            }
            return Ok(());
        }
        w.limit = saturation_limit(n, scale, k, base);
        w.exponent = Some(exponent);
        w.sum = Self::fixed_sum(&w.samples, w.limit)?;
        Ok(())
    }

    fn fixed_sum(samples: &VecDeque<f64>, limit: f64) -> Result<ExactSum> {
        let mut s = ExactSum::default();
        for &x in samples {
            s.add(ExactSum::quantize(sat(x, limit))?);
        }
        Ok(s)
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.arms[arm].samples.len() as u64
    }

    pub fn total(&self) -> usize {
        self.order.len()
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        let w = &self.arms[arm];
        let n = w.samples.len();
        (n > 0).then(|| w.sum.value() / n as f64)
    }

    /// Exact saturated sum recomputed from the window. Verification only.
    pub fn recomputed_sum(&self, arm: usize) -> Option<ExactSum> {
        let w = &self.arms[arm];
        let n = w.samples.len() as u64;
        if n == 0 {
            return None;
        }
        let limit = saturation_limit(n, self.horizon_scale, self.arms.len(), self.base);
        Self::fixed_sum(&w.samples, limit).ok()
    }

    pub fn cached_sum(&self, arm: usize) -> Option<ExactSum> {
        let w = &self.arms[arm];
        (!w.samples.is_empty()).then_some(w.sum)
    }

    pub fn samples(&self, arm: usize) -> impl Iterator<Item = f64> + '_ {
        self.arms[arm].samples.iter().copied()
    }

    pub fn clear(&mut self) {
        self.order.clear();
        self.arms.fill(ArmWindow::default());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim_rng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn ln_plus_values() {
        assert_abs_diff_eq!(ln_plus(std::f64::consts::E).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(ln_plus(0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(ln_plus(10.0).unwrap(), std::f64::consts::LN_10, epsilon = 1e-12);
        assert!(matches!(ln_plus(0.0), Err(Error::Domain(_))));
        assert!(ln_plus(-1.0).is_err());
    }

    #[test]
    fn h_values() {
        assert_abs_diff_eq!(h(1, 1.1), 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(h(10, 1.1), 1.1f64.powi(25), epsilon = 1e-12);
        assert_abs_diff_eq!(h(10, 1.1), 10.8347, epsilon = 1e-4);
        assert_abs_diff_eq!(h(100, 1.1), 1.1f64.powi(49), epsilon = 1e-12);
        assert_abs_diff_eq!(h(100, 1.1), 106.719, epsilon = 1e-3);
        assert_eq!(h(4, 2.0), 8.0);
        assert_eq!(h(7, 2.0), 8.0);
        assert_eq!(h(8, 2.0), 16.0);
    }

    #[test]
    fn h_exceeds_argument_and_is_blockwise_constant() {
        for a in [1.1, 2.0] {
            let mut prev_exp = block_exponent(1, a);
            for m in 1..=10_000u64 {
                let hm = h(m, a);
                assert!(hm > m as f64, "h({m}, {a}) = {hm}");
                let j = block_exponent(m, a);
                assert!(a.powi(j) <= m as f64 && (m as f64) < a.powi(j + 1));
                assert!(j >= prev_exp);
                if j == prev_exp && m > 1 {
                    assert_eq!(hm, h(m - 1, a));
                }
                prev_exp = j;
            }
        }
    }

    #[test]
    fn saturation_limit_values() {
        let b = saturation_limit(100, 5000.0, 3, 1.1);
        let hn = 1.1f64.powi(49);
        assert_abs_diff_eq!(b, (hn / (5000.0 / (3.0 * hn)).ln()).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(b, 6.2314, epsilon = 1e-4);
        assert_abs_diff_eq!(saturation_limit(1, 5000.0, 3, 1.1), 0.38756, epsilon = 1e-5);
        // Clamped denominator.
        assert_abs_diff_eq!(saturation_limit(100, 300.0, 3, 1.1), hn.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn saturation_limit_monotone_within_blocks() {
        for n in 1..5000u64 {
            let (b0, b1) = (saturation_limit(n, 5000.0, 3, 1.1), saturation_limit(n + 1, 5000.0, 3, 1.1));
            if block_exponent(n, 1.1) == block_exponent(n + 1, 1.1) {
                assert_eq!(b0, b1);
            } else {
                assert!(b1 >= b0);
            }
        }
    }

    #[test]
    fn sat_and_saturated_mean() {
        assert_eq!(sat(5.0, 2.0), 2.0);
        assert_eq!(sat(-3.0, 2.0), -2.0);
        assert_eq!(sat(0.5, 2.0), 0.5);
        assert_abs_diff_eq!(saturated_mean(&[0.1, 5.0, -4.0], 2.0).unwrap(), 0.1 / 3.0, epsilon = 1e-15);
        assert_eq!(saturated_mean(&[10.0], 1.0).unwrap(), 1.0);
        let xs = [0.3, -0.2, 0.9];
        assert_abs_diff_eq!(saturated_mean(&xs, 1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(saturated_mean(&[], 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn discounted_two_step_example() {
        let mut d = DiscountedStats::new(2, 0.9).unwrap();
        d.step(0, 1.0);
        d.step(0, 0.0);
        assert_abs_diff_eq!(d.count(0), 1.71, epsilon = 1e-12);
        assert_abs_diff_eq!(d.mean(0).unwrap(), 0.81 / 1.71, epsilon = 1e-12);
        assert_eq!(d.count(1), 0.0);
        assert_eq!(d.mean(1), None);
    }

    #[test]
    fn discounted_constant_rewards() {
        let mut d = DiscountedStats::new(3, 0.7).unwrap();
        let mut rng = sim_rng(1, 0);
        for _ in 0..200 {
            d.step(rng.random_range(0..3), 0.42);
        }
        for k in 0..3 {
            assert_abs_diff_eq!(d.mean(k).unwrap(), 0.42, epsilon = 1e-12);
        }
    }

    /// Direct-sum discounted count and mean at decision time `t = len + 1`.
    pub(crate) fn discounted_direct(gamma: f64, trace: &[(usize, f64)], arm: usize) -> (f64, f64) {
        let t = trace.len() + 1;
        let (mut n, mut s) = (0.0, 0.0);
        for (i, &(k, x)) in trace.iter().enumerate() {
            if k == arm {
                let w = gamma.powi((t - (i + 1)) as i32);
                n += w;
                s += w * x;
            }
        }
        (n, s / n)
    }

    #[test]
    fn discounted_matches_direct_sum_on_random_trace() {
        let mut rng = sim_rng(9, 0);
        let gamma = 0.95;
        let mut d = DiscountedStats::new(3, gamma).unwrap();
        let mut trace = Vec::new();
        for _ in 0..50 {
            let (k, x) = (rng.random_range(0..3), rng.random::<f64>());
            d.step(k, x);
            trace.push((k, x));
        }
        for k in 0..3 {
            let (n, m) = discounted_direct(gamma, &trace, k);
            assert_relative_eq!(d.count(k), n, max_relative = 1e-9);
            assert_relative_eq!(d.mean(k).unwrap(), m, max_relative = 1e-9);
            assert!(d.count(k) <= gamma / (1.0 - gamma) + 1.0);
        }
    }

    #[test]
    fn window_fifo_eviction() {
        let mut w = WindowStats::new(2, 3).unwrap();
        for arm in [0, 0, 1, 0] {
            w.push(arm, 1.0).unwrap();
        }
        assert_eq!((w.count(0), w.count(1)), (2, 1));
        assert_eq!(w.len(), 3);

        let mut big = WindowStats::new(2, 10).unwrap();
        for arm in [0, 1, 1, 0, 1] {
            big.push(arm, 0.5).unwrap();
        }
        assert_eq!((big.count(0), big.count(1)), (2, 3));
    }

    #[test]
    fn window_incremental_matches_recompute() {
        let mut rng = sim_rng(4, 0);
        let mut w = WindowStats::new(4, 37).unwrap();
        for i in 0..10_000usize {
            let x = rng.random::<f64>() * 10.0 - 5.0;
            w.push(rng.random_range(0..4), x).unwrap();
            assert_eq!(w.len(), (i + 1).min(37));
            if i % 97 == 0 {
                let (c, s) = w.recomputed();
                assert_eq!((0..4).map(|k| w.count(k)).collect::<Vec<_>>(), c);
                assert_eq!((0..4).map(|k| w.sum(k)).collect::<Vec<_>>(), s);
            }
        }
        let (c, s) = w.recomputed();
        assert_eq!((0..4).map(|k| w.count(k)).collect::<Vec<_>>(), c);
        assert_eq!((0..4).map(|k| w.sum(k)).collect::<Vec<_>>(), s);
        for k in 0..4 {
            let xs: Vec<f64> = w.entries().filter(|e| e.0 == k).map(|e| e.1).collect();
            let naive = xs.iter().sum::<f64>() / xs.len() as f64;
            assert_abs_diff_eq!(w.mean(k).unwrap(), naive, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_sum_rejects_non_finite() {
        assert!(ExactSum::quantize(f64::NAN).is_err());
        assert!(ExactSum::quantize(1e30).is_err());
        let mut w = WindowStats::new(2, 3).unwrap();
        assert!(w.push(0, f64::INFINITY).is_err());
    }

    #[test]
    fn saturated_cache_matches_naive_exactly() {
        let mut rng = sim_rng(2, 0);
        let noise = crate::env::EnvKind::sinusoidal_pareto().noise();
        let mut s = SaturatedStats::new(3, 1.1, 203.0).unwrap();
        for _ in 0..3000 {
            let k = rng.random_range(0..3);
            s.push(k, crate::env::draw_reward(noise, 0.1, &mut rng)).unwrap();
            assert_eq!(s.mean(k), s.naive_mean(k));
        }
        for k in 0..3 {
            assert_eq!(s.mean(k), s.naive_mean(k));
        }
    }

    #[test]
    fn saturated_inactive_equals_plain_mean() {
        let mut s = SaturatedStats::new(2, 1.1, 1000.0).unwrap();
        let xs = [0.1, 0.2, -0.05, 0.3];
        for &x in &xs {
            s.push(0, x).unwrap();
        }
        assert!(xs.iter().all(|x| x.abs() <= s.limit(0).unwrap()));
        assert_abs_diff_eq!(s.mean(0).unwrap(), xs.iter().sum::<f64>() / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn windowed_saturated_matches_recompute() {
        let mut rng = sim_rng(8, 0);
        let noise = crate::env::EnvKind::sinusoidal_pareto().noise();
        let mut s = WindowedSaturatedStats::new(3, 50, 1.1, 50.0).unwrap();
        for i in 0..5000usize {
            let k = if rng.random::<f64>() < 0.6 { 0 } else { rng.random_range(0..3) };
            s.push(k, crate::env::draw_reward(noise, 0.0, &mut rng)).unwrap();
            assert_eq!(s.total(), (i + 1).min(50));
            for arm in 0..3 {
                assert_eq!(s.cached_sum(arm), s.recomputed_sum(arm));
                if let Some(m) = s.mean(arm) {
                    let xs: Vec<f64> = s.samples(arm).collect();
                    let limit = saturation_limit(xs.len() as u64, 50.0, 3, 1.1);
                    assert_abs_diff_eq!(m, saturated_mean(&xs, limit).unwrap(), epsilon = 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn window_counts_sum_to_min_t_tau(
            cap in 1usize..40,
            pushes in proptest::collection::vec((0usize..3, -2.0f64..2.0), 0..200),
        ) {
            let mut w = WindowStats::new(3, cap).unwrap();
            for (i, &(k, x)) in pushes.iter().enumerate() {
                w.push(k, x).unwrap();
                let total: u64 = (0..3).map(|a| w.count(a)).sum();
                prop_assert_eq!(total as usize, (i + 1).min(cap));
            }
            let (c, s) = w.recomputed();
            prop_assert_eq!((0..3).map(|k| w.count(k)).collect::<Vec<_>>(), c);
            prop_assert_eq!((0..3).map(|k| w.sum(k)).collect::<Vec<_>>(), s);
        }

        #[test]
        fn discounted_recursion_matches_definition(
            gamma in 0.5f64..0.999,
            trace in proptest::collection::vec((0usize..3, 0.0f64..1.0), 1..120),
        ) {
            let mut d = DiscountedStats::new(3, gamma).unwrap();
            for &(k, x) in &trace {
                d.step(k, x);
            }
            for k in 0..3 {
                let (n, m) = discounted_direct(gamma, &trace, k);
                if n > 0.0 {
                    prop_assert!((d.count(k) - n).abs() <= 1e-9 * n);
                    prop_assert!((d.mean(k).unwrap() - m).abs() <= 1e-9 * m.abs().max(1e-300) + 1e-12);
                } else {
                    prop_assert_eq!(d.count(k), 0.0);
                }
                prop_assert!(d.count(k) >= 0.0);
                prop_assert!(d.count(k) <= gamma / (1.0 - gamma) + 1.0);
            }
        }
    }
}
