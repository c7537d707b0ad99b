//! Confidence radii: the high-probability radius for rank-`R` reward
//! matrices and the cheaper radius used in simulations.

use crate::error::{Error, Result};
use crate::model::Hyperparams;

/// Upper bound on `log N(L, alpha, ||.||_F)` for rank-`rank` `n x m` matrices
/// with entries in `[0, bound]`, clamped at zero.
pub fn covering_log_bound(n: usize, m: usize, rank: usize, bound: f64, alpha: f64) -> Result<f64> {
    if n == 0 || m == 0 || rank == 0 || !(bound > 0.0) || !(alpha > 0.0) {
        return Err(Error::invalid(format!(
            "covering bound needs positive arguments (n={n}, m={m}, rank={rank}, bound={bound}, alpha={alpha})"
        )));
    }
    let scale = 9.0 * bound * ((n * m) as f64).sqrt() / alpha;
    Ok(((n + m + 1) as f64 * rank as f64 * scale.ln()).max(0.0))
}

/// Squared confidence radius at round `t`:
///
/// `8 eta^2 log(N/delta) + 2 alpha t n m [8 B + sqrt(8 eta^2 log(4 n m t^2 / delta))] + 4 gamma G^2`
///
/// with `log N` from [`covering_log_bound`]. A zero reward bound collapses the
/// structure set to a single point, whose covering number is 1.
pub fn beta_star(hp: &Hyperparams, t: u64, n: usize, m: usize) -> Result<f64> {
    let valid = hp.eta >= 0.0
        && hp.bound >= 0.0
        && hp.init_radius >= 0.0
        && hp.gamma > 0.0
        && hp.delta > 0.0
        && hp.delta < 1.0
        && hp.alpha_cover > 0.0
        && hp.rank >= 1
        && t >= 1
        && n > 0
        && m > 0;
    if !valid {
        return Err(Error::invalid(format!("invalid radius inputs {hp:?}, t={t}")));
    }
    let eta_sq = hp.eta * hp.eta;
    let log_cover = if hp.bound == 0.0 {
        0.0
    } else {
        covering_log_bound(n, m, hp.rank, hp.bound, hp.alpha_cover)?
    };
    let nm = (n * m) as f64;
    let t = t as f64;
    let union = 8.0 * eta_sq * (log_cover - hp.delta.ln());
    let discretization = 2.0
        * hp.alpha_cover
        * t
        * nm
        * (8.0 * hp.bound + (8.0 * eta_sq * (4.0 * nm * t * t / hp.delta).ln()).sqrt());
    let prior = 4.0 * hp.gamma * hp.init_radius * hp.init_radius;
    Ok(union + discretization + prior)
}

/// Simulation radius `kappa^2 eta^2 ln(n m t)`.
pub fn practical_beta(kappa: f64, eta: f64, n: usize, m: usize, t: u64) -> f64 {
    kappa * kappa * eta * eta * ((n * m) as f64 * t.max(1) as f64).ln().max(0.0)
}
