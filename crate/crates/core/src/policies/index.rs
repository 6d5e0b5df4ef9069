//! Tuning rules and UCB index formulas.

use crate::env::switching_epoch_len;
use crate::error::{Error, Result};

/// Restart period / window length `ceil(K^{1/3} (T / V_T)^{2/3})`.
pub fn tau_epoch(arms: usize, horizon: usize, budget: f64) -> Result<usize> {
    if !(budget > 0.0) {
        return Err(Error::config(format!(
            "variation budget must be positive to tune a forgetting policy, got {budget}; use the stationary policy instead"
        )));
    }
    if arms < 2 || horizon < 1 {
        return Err(Error::config(format!("need K >= 2 and T >= 1, got K={arms} T={horizon}")));
    }
    Ok(switching_epoch_len(arms, horizon, budget).max(1))
}

/// Discount factor `1 - K^{-1/3} (T / V_T)^{-2/3}`.
pub fn gamma_discount(arms: usize, horizon: usize, budget: f64) -> Result<f64> {
    if !(budget > 0.0) {
        return Err(Error::config(format!(
            "variation budget must be positive to tune a discounted policy, got {budget}"
        )));
    }
    let scale = (arms as f64).cbrt() * (horizon as f64 / budget).powf(2.0 / 3.0);
    let gamma = 1.0 - 1.0 / scale;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::config(format!(
            "discount 1 - 1/{scale} = {gamma} is outside (0, 1); T/V_T is too small"
        )));
    }
    Ok(gamma)
}

/// `psi(x) = (1 + 1/x) ln(1 + x) - 1`, increasing on `(0, inf)`.
pub fn psi(x: f64) -> f64 {
    (1.0 + 1.0 / x) * x.ln_1p() - 1.0
}

/// Whether `(a, zeta)` satisfies `psi(2 zeta / a) >= 2 a / zeta`.
pub fn robust_admissible(a: f64, zeta: f64) -> bool {
    a > 1.0 && zeta > 0.0 && psi(2.0 * zeta / a) >= 2.0 * a / zeta
}

/// `mean + sqrt(2 ln t / n)`.
pub fn ucb1_index(mean: f64, n: u64, t: f64) -> f64 {
    mean + (2.0 * t.ln() / n as f64).sqrt()
}

/// `mean + sqrt(max(ln(T / (K n)), 0) / n)`.
pub fn moss_index(mean: f64, n: u64, horizon: f64, arms: usize) -> f64 {
    let n = n as f64;
    mean + ((horizon / (arms as f64 * n)).ln().max(0.0) / n).sqrt()
}

/// `mean + sqrt(eta max(ln(tau / (K n)), 0) / n)`.
pub fn sw_moss_index(mean: f64, n: u64, tau: f64, arms: usize, eta: f64) -> f64 {
    let n = n as f64;
    mean + (eta * (tau / (arms as f64 * n)).ln().max(0.0) / n).sqrt()
}

/// `mean + 2 sqrt(xi ln(tau_eff) / n_gamma)`.
pub fn ducb_index(mean: f64, n_gamma: f64, tau_eff: f64, xi: f64) -> f64 {
    mean + 2.0 * (xi * tau_eff.ln() / n_gamma).sqrt()
}

/// Width `sqrt(ln_+(H / (K n)) / n)` of the robust confidence bound.
pub fn robust_width(n: u64, horizon_scale: f64, arms: usize) -> f64 {
    let n = n as f64;
    ((horizon_scale / (arms as f64 * n)).ln().max(1.0) / n).sqrt()
}

/// `sat_mean + (1 + zeta) sqrt(ln_+(H / (K n)) / n)`.
pub fn robust_index(sat_mean: f64, n: u64, horizon_scale: f64, arms: usize, zeta: f64) -> f64 {
    sat_mean + (1.0 + zeta) * robust_width(n, horizon_scale, arms)
}

/// Picks the first arm flagged unsampled; otherwise the lowest-index arm
/// with the largest index value.
pub fn select_by_index(
    arms: usize,
    unsampled: impl Fn(usize) -> bool,
    index: impl Fn(usize) -> f64,
) -> usize {
    if let Some(k) = (0..arms).find(|&k| unsampled(k)) {
        return k;
    }
    let mut best = 0;
    let mut best_value = index(0);
    for k in 1..arms {
        let v = index(k);
        if v > best_value {
            best = k;
            best_value = v;
        }
    }
    best
}
