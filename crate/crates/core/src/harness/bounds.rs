//! Monte-Carlo checks of the under/over-estimation bounds behind the
//! sliding-window policies.
//!
//! A single stationary arm is sampled `tau` times per trial. For every
//! grid point `(x, l)` a trial counts as a hit when the event holds for
//! *some* sample count `m` in `[l, tau]`, which contains the event at any
//! one time step whatever the sampling schedule.

use rayon::prelude::*;

use crate::env::{draw_reward, NoiseModel};
use crate::error::{Error, Result};
use crate::estimators::{h, SaturatedStats};
use crate::policies::index::{psi, robust_admissible, robust_width};
use crate::{sim_rng, SimRng};

const CHUNK: u64 = 1000;

/// Mean of the heavy-tailed test arm.
pub const ROBUST_ARM_MEAN: f64 = 0.15;

/// Noise of the heavy-tailed test arm; `E[X^2] <= 1` at [`ROBUST_ARM_MEAN`].
pub const ROBUST_ARM_NOISE: NoiseModel = NoiseModel::TwoSidedPareto {
    shape: 0.4,
    scale: 0.23,
};

/// Grid and sampling effort shared by both checks.
#[derive(Clone, Debug)]
pub struct BoundGrid {
    pub xs: Vec<f64>,
    pub ls: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for BoundGrid {
    fn default() -> Self {
        Self {
            xs: vec![0.2, 0.3, 0.5],
            ls: vec![10, 20, 50],
            trials: 100_000,
            seed: 0,
            workers: 1,
        }
    }
}

/// One grid point of one event.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheckReport {
    /// `sw-under`, `sw-over`, `robust-under` or `robust-over`.
    pub lemma: &'static str,
    pub x: f64,
    pub l: usize,
    pub trials: u64,
    pub empirical: f64,
    pub bound: f64,
    /// `bound - empirical`.
    pub margin: f64,
    /// Binomial standard error of `empirical`.
    pub std_err: f64,
}

impl BoundCheckReport {
    /// Whether `empirical <= bound + 3 std_err`.
    pub fn holds(&self) -> bool {
        self.margin >= -3.0 * self.std_err
    }
}

/// `(2 eta)^{3/2} / ln(2 eta) * K / (tau x^2) * exp(-x^2 l / eta)`.
pub fn sw_bound(eta: f64, arms: usize, tau: usize, x: f64, l: usize) -> f64 {
    (2.0 * eta).powf(1.5) / (2.0 * eta).ln() * arms as f64 / (tau as f64 * x * x)
        * (-x * x * l as f64 / eta).exp()
}

/// `beta = psi(2 zeta / a) / (2 a)`.
pub fn robust_beta(a: f64, zeta: f64) -> f64 {
    psi(2.0 * zeta / a) / (2.0 * a)
}

/// `2a / (beta^2 ln a) * K / (tau x^2) * (y + 1) exp(-y)` with
/// `y = beta x sqrt(h(l) / a)`.
pub fn robust_bound(a: f64, zeta: f64, arms: usize, tau: usize, x: f64, l: usize) -> f64 {
    let beta = robust_beta(a, zeta);
    let y = beta * x * (h(l as u64, a) / a).sqrt();
    2.0 * a / (beta * beta * a.ln()) * arms as f64 / (tau as f64 * x * x) * (y + 1.0) * (-y).exp()
}

/// Under- and over-estimation frequencies of the sliding-window MOSS
/// index for a centered Bernoulli(1/2) arm.
pub fn verify_sw_bound(eta: f64, arms: usize, tau: usize, grid: &BoundGrid) -> Result<Vec<BoundCheckReport>> {
    if !(eta > 0.5) {
        return Err(Error::config(format!("eta must exceed 1/2, got {eta}")));
    }
    check_grid(tau, grid)?;
    let mean = 0.5;
    let widths: Vec<f64> = (1..=tau)
        .map(|m| {
            let m = m as f64;
            (eta * (tau as f64 / (arms as f64 * m)).ln().max(0.0) / m).sqrt()
        })
        .collect();
    let counts = count_events(grid, tau, mean, |rng, lower, upper| {
        let mut sum = 0.0;
        for m in 1..=tau {
            sum += draw_reward(NoiseModel::Bernoulli, mean, rng);
            let avg = sum / m as f64;
            lower[m - 1] = avg + widths[m - 1];
            upper[m - 1] = avg - widths[m - 1];
        }
        Ok(())
    })?;
    Ok(reports(grid, &counts, ("sw-under", "sw-over"), |x, l| sw_bound(eta, arms, tau, x, l)))
}

/// Under- and over-estimation frequencies of the robust (saturated) index
/// for a two-sided Pareto arm with mean [`ROBUST_ARM_MEAN`].
pub fn verify_robust_bound(
    a: f64,
    zeta: f64,
    arms: usize,
    tau: usize,
    grid: &BoundGrid,
) -> Result<Vec<BoundCheckReport>> {
    if !robust_admissible(a, zeta) {
        return Err(Error::config(format!(
            "a={a}, zeta={zeta} violate psi(2 zeta / a) >= 2 a / zeta"
        )));
    }
    check_grid(tau, grid)?;
    let mean = ROBUST_ARM_MEAN;
    let widths: Vec<f64> = (1..=tau).map(|m| robust_width(m as u64, tau as f64, arms)).collect();
    let counts = count_events(grid, tau, mean, |rng, lower, upper| {
        // Only arm 0 is sampled; the arm count enters the saturation limit.
        let mut stats = SaturatedStats::new(arms, a, tau as f64)?;
        for m in 1..=tau {
            stats.push(0, draw_reward(ROBUST_ARM_NOISE, mean, rng))?;
            let g = stats.mean(0).expect("sampled") + (1.0 + zeta) * widths[m - 1];
            lower[m - 1] = g;
            upper[m - 1] = g - 2.0 * widths[m - 1];
        }
        Ok(())
    })?;
    Ok(reports(grid, &counts, ("robust-under", "robust-over"), |x, l| {
        robust_bound(a, zeta, arms, tau, x, l)
    }))
}

fn check_grid(tau: usize, grid: &BoundGrid) -> Result<()> {
    if grid.trials == 0 || grid.workers == 0 {
        return Err(Error::config("trials and workers must be at least 1"));
    }
    if let Some(x) = grid.xs.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::config(format!("grid x must be positive, got {x}")));
    }
    if let Some(l) = grid.ls.iter().find(|l| **l == 0 || **l > tau) {
        return Err(Error::config(format!("grid l must lie in 1..={tau}, got {l}")));
    }
    Ok(())
}

/// Hit counts `(under, over)` per grid point, `x` major.
///
/// `path` fills, for `m = 1..=tau`, the statistic compared against
/// `mean - x` (under) and `mean + x` (over).
fn count_events<F>(grid: &BoundGrid, tau: usize, mean: f64, path: F) -> Result<Vec<(u64, u64)>>
where
    F: Fn(&mut SimRng, &mut [f64], &mut [f64]) -> Result<()> + Sync,
{
    let points = grid.xs.len() * grid.ls.len();
    let chunks = grid.trials.div_ceil(CHUNK);
    let chunk = |c: u64| -> Result<Vec<(u64, u64)>> {
        let mut rng = sim_rng(grid.seed, c);
        let mut counts = vec![(0, 0); points];
        let (mut lower, mut upper) = (vec![0.0; tau], vec![0.0; tau]);
        let n = CHUNK.min(grid.trials - c * CHUNK);
        for _ in 0..n {
            path(&mut rng, &mut lower, &mut upper)?;
            // Suffix extremes over m >= l.
            for m in (0..tau - 1).rev() {
                lower[m] = lower[m].min(lower[m + 1]);
                upper[m] = upper[m].max(upper[m + 1]);
            }
            for (i, &x) in grid.xs.iter().enumerate() {
                for (j, &l) in grid.ls.iter().enumerate() {
                    let slot = &mut counts[i * grid.ls.len() + j];
                    slot.0 += u64::from(lower[l - 1] <= mean - x);
                    slot.1 += u64::from(upper[l - 1] >= mean + x);
                }
            }
        }
        Ok(counts)
    };
    let per_chunk: Vec<Vec<(u64, u64)>> = if grid.workers == 1 {
        (0..chunks).map(chunk).collect::<Result<_>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(grid.workers)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?
            .install(|| (0..chunks).into_par_iter().map(chunk).collect::<Result<_>>())?
    };
    let mut total = vec![(0, 0); points];
    for counts in per_chunk {
        for (t, c) in total.iter_mut().zip(counts) {
            t.0 += c.0;
            t.1 += c.1;
        }
    }
    Ok(total)
}

fn reports(
    grid: &BoundGrid,
    counts: &[(u64, u64)],
    labels: (&'static str, &'static str),
    bound: impl Fn(f64, usize) -> f64,
) -> Vec<BoundCheckReport> {
    let mut out = Vec::with_capacity(2 * counts.len());
    for (label, over) in [(labels.0, false), (labels.1, true)] {
        for (i, &x) in grid.xs.iter().enumerate() {
            for (j, &l) in grid.ls.iter().enumerate() {
                let c = counts[i * grid.ls.len() + j];
                let hits = if over { c.1 } else { c.0 };
                let n = grid.trials as f64;
                let p = hits as f64 / n;
                let b = bound(x, l);
                out.push(BoundCheckReport {
                    lemma: label,
                    x,
                    l,
                    trials: grid.trials,
                    empirical: p,
                    bound: b,
                    margin: b - p,
                    std_err: (p * (1.0 - p) / n).sqrt(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sw_bound_value() {
        let direct = 2f64.powf(1.5) / 2f64.ln() * 3.0 / (203.0 * 0.09) * (-1.8f64).exp();
        assert_abs_diff_eq!(sw_bound(1.0, 3, 203, 0.3, 20), direct, epsilon = 1e-15);
        assert_abs_diff_eq!(sw_bound(1.0, 3, 203, 0.3, 20), 0.11076, epsilon = 1e-5);
        assert!(sw_bound(1.0, 3, 203, 5.0, 20) < 1e-100);
    }

    #[test]
    fn robust_beta_and_first_block() {
        assert_abs_diff_eq!(robust_beta(1.1, 2.2), 0.45991, epsilon = 1e-5);
        // h(1) = a, so the exponent is beta x.
        let beta = robust_beta(1.1, 2.2);
        let y = beta * 0.3;
        let direct = 2.2 / (beta * beta * 1.1f64.ln()) * 3.0 / (203.0 * 0.09) * (y + 1.0) * (-y).exp();
        assert_abs_diff_eq!(robust_bound(1.1, 2.2, 3, 203, 0.3, 1), direct, epsilon = 1e-12);
    }

    #[test]
    fn small_runs_hold_and_are_reproducible() {
        let grid = BoundGrid {
            trials: 3000,
            ..BoundGrid::default()
        };
        let a = verify_sw_bound(1.0, 3, 203, &grid).unwrap();
        assert_eq!(a.len(), 18);
        assert!(a.iter().all(BoundCheckReport::holds));
        let parallel = BoundGrid { workers: 3, ..grid.clone() };
        assert_eq!(a, verify_sw_bound(1.0, 3, 203, &parallel).unwrap());
        let r = verify_robust_bound(1.1, 2.2, 3, 203, &grid).unwrap();
        assert!(r.iter().all(BoundCheckReport::holds));
    }

    #[test]
    fn large_deviation_is_never_hit() {
        let grid = BoundGrid {
            xs: vec![2.0],
            ls: vec![1],
            trials: 2000,
            ..BoundGrid::default()
        };
        // Bernoulli averages stay within [0, 1] and the width is nonnegative.
        let rows = verify_sw_bound(1.0, 3, 203, &grid).unwrap();
        assert!(rows.iter().all(|r| r.empirical == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = BoundGrid::default();
        assert!(verify_sw_bound(0.5, 3, 203, &grid).is_err());
        assert!(verify_robust_bound(1.1, 0.1, 3, 203, &grid).is_err());
        let long = BoundGrid { ls: vec![300], ..BoundGrid::default() };
        assert!(verify_sw_bound(1.0, 3, 203, &long).is_err());
    }
}
