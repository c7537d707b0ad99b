//! Dual decomposition of the allocation problem.
//!
//! Relaxing the capacity constraints with item prices `lambda >= 0` splits the
//! Lagrangian into one problem per user: pick up to `d_u` items with the
//! largest positive price-adjusted reward. Prices then follow projected
//! subgradient steps `lambda <- max(0, lambda - step * (c - load))`.

use crate::error::{Error, Result};
use crate::model::{allocation_value, AllocationMatrix, ConstraintProfile, MeanRewardMatrix};

use super::solve_exact;

/// Nonnegative per-item prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn zeros(n_items: usize) -> Self {
        Self(vec![0.0; n_items])
    }

    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if prices.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("prices must be finite and nonnegative"));
        }
        Ok(Self(prices))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualConfig {
    pub step_size: f64,
    pub max_iters: usize,
    /// Largest tolerated capacity overshoot, in units.
    pub tol: f64,
    /// Consecutive feasible iterations required to stop.
    pub patience: usize,
}

impl DualConfig {
    /// Defaults scaled to the reward bound.
    pub fn for_bound(bound: f64) -> Self {
        Self {
            step_size: 0.05 * bound,
            max_iters: 2000,
            tol: 0.0,
            patience: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualSolveReport {
    pub allocation: AllocationMatrix,
    pub prices: PriceVector,
    pub iterations: usize,
    pub converged: bool,
    /// The exact solver produced `allocation` because the price loop did not settle.
    pub repaired: bool,
    pub dual_value: f64,
    pub primal_value: f64,
}

/// A user's best response to prices: up to `demand` items with the largest
/// strictly positive `theta - lambda`, lowest index first on ties.
pub fn user_best_response(theta_row: &[f64], prices: &PriceVector, demand: u32) -> Result<Vec<bool>> {
    if theta_row.len() != prices.len() {
        return Err(Error::dims(format!(
            "{} rewards vs {} prices",
            theta_row.len(),
            prices.len()
        )));
    }
    Ok(best_response_unchecked(theta_row, prices.as_slice(), demand).0)
}

fn best_response_unchecked(theta_row: &[f64], prices: &[f64], demand: u32) -> (Vec<bool>, f64) {
    let mut chosen = vec![false; theta_row.len()];
    if demand == 0 {
        return (chosen, 0.0);
    }
    let mut candidates: Vec<(usize, f64)> = theta_row
        .iter()
        .zip(prices)
        .map(|(t, l)| t - l)
        .enumerate()
        .filter(|&(_, v)| v > 0.0)
        .collect();
    // Stable sort keeps index order among equal values.
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut value = 0.0;
    for &(i, v) in candidates.iter().take(demand as usize) {
        chosen[i] = true;
        value += v;
    }
    (chosen, value)
}

/// Lagrangian dual function: `sum_u max_x x^T (theta_u - lambda) + lambda^T c`.
pub fn dual_objective(
    theta: &MeanRewardMatrix,
    profile: &ConstraintProfile,
    prices: &PriceVector,
) -> Result<f64> {
    let (n, m) = theta.shape();
    profile.check_shape(n, m)?;
    if prices.len() != m {
        return Err(Error::dims("price vector length"));
    }
    let users: f64 = (0..n)
        .map(|u| best_response_unchecked(theta.row(u), prices.as_slice(), profile.demands[u]).1)
        .sum();
    let priced: f64 = prices
        .as_slice()
        .iter()
        .zip(&profile.capacities)
        .map(|(l, &c)| l * f64::from(c))
        .sum();
    Ok(users + priced)
}

/// Projected subgradient ascent on item prices.
///
/// Stops once the aggregate demand fits every capacity (within `tol`) for
/// `patience` consecutive iterations. When `max_iters` runs out first the
/// allocation comes from [`solve_exact`] and `repaired` is set; prices are
/// still those of the last iterate.
pub fn dual_price_iteration(
    theta: &MeanRewardMatrix,
    profile: &ConstraintProfile,
    config: &DualConfig,
) -> Result<DualSolveReport> {
    let (n, m) = theta.shape();
    profile.check_shape(n, m)?;
    if !(config.step_size > 0.0 && config.step_size.is_finite()) {
        return Err(Error::invalid(format!("step size {} must be positive", config.step_size)));
    }
    if !theta.is_finite() {
        return Err(Error::invalid("reward matrix has non-finite entries"));
    }

    let mut lambda = vec![0.0; m];
    let mut streak = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut x = AllocationMatrix::zeros(n, m);

    while iterations < config.max_iters {
        iterations += 1;
        x = AllocationMatrix::zeros(n, m);
        let mut load = vec![0u64; m];
        for u in 0..n {
            let (row, _) = best_response_unchecked(theta.row(u), &lambda, profile.demands[u]);
            for (i, on) in row.into_iter().enumerate() {
                if on {
                    x.set(u, i, true);
                    load[i] += 1;
                }
            }
        }
        let fits = load
            .iter()
            .zip(&profile.capacities)
            .all(|(&l, &c)| l as f64 - f64::from(c) <= config.tol);
        if fits {
            streak += 1;
            if streak >= config.patience {
                converged = true;
                break;
            }
        } else {
            streak = 0;
        }
        for ((p, &l), &c) in lambda.iter_mut().zip(&load).zip(&profile.capacities) {
            *p = (*p - config.step_size * (f64::from(c) - l as f64)).max(0.0);
        }
    }

    let prices = PriceVector(lambda);
    let repaired = !converged;
    if repaired {
        x = solve_exact(theta, profile)?.0;
    }
    let primal_value = allocation_value(&x, theta)?;
    let dual_value = dual_objective(theta, profile, &prices)?;
    Ok(DualSolveReport {
        allocation: x,
        prices,
        iterations,
        converged,
        repaired,
        dual_value,
        primal_value,
    })
}
