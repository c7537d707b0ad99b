//! Capacity- and demand-constrained allocation.
//!
//! [`solve_exact`] maximizes `<X, Theta>` over binary `X` with row sums at most
//! the demands and column sums at most the capacities. The constraint matrix is
//! a bipartite incidence matrix, so the LP relaxation is integral and a
//! min-cost flow gives the integer optimum directly.

mod dual;
mod flow;

pub use dual::{
    dual_objective, dual_price_iteration, user_best_response, DualConfig, DualSolveReport,
    PriceVector,
};

use crate::error::{Error, Result};
use crate::model::{
    allocation_value, validate_allocation, AllocationMatrix, ConstraintProfile, MeanRewardMatrix,
};
use flow::MinCostFlow;

/// Enumeration limit for [`brute_force_allocation`].
pub const BRUTE_FORCE_MAX_CELLS: usize = 20;

/// How an allocation is computed from a reward matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AllocationMethod {
    /// [`solve_exact`].
    Exact,
    /// [`dual_price_iteration`], repaired by the exact solver when prices do not settle.
    Dual(DualConfig),
}

impl AllocationMethod {
    pub fn allocate(
        &self,
        theta: &MeanRewardMatrix,
        profile: &ConstraintProfile,
    ) -> Result<AllocationMatrix> {
        match self {
            AllocationMethod::Exact => Ok(solve_exact(theta, profile)?.0),
            AllocationMethod::Dual(cfg) => Ok(dual_price_iteration(theta, profile, cfg)?.allocation),
        }
    }
}

/// Exact optimum of the allocation integer program.
///
/// Network: source -> user `u` (capacity `d_u`), user -> item for every
/// `theta[u][i] > 0` (capacity 1, cost `-theta[u][i]`), item -> sink
/// (capacity `c_i`). Non-positive entries are never allocated.
pub fn solve_exact(
    theta: &MeanRewardMatrix,
    profile: &ConstraintProfile,
) -> Result<(AllocationMatrix, f64)> {
    let (n, m) = theta.shape();
    profile.check_shape(n, m)?;
    if !theta.is_finite() {
        return Err(Error::invalid("reward matrix has non-finite entries"));
    }

    let source = n + m;
    let sink = n + m + 1;
    let mut net = MinCostFlow::new(n + m + 2);
    for (u, &d) in profile.demands.iter().enumerate() {
        if d > 0 {
            net.add_edge(source, u, i64::from(d), 0.0);
        }
    }
    let mut handles = Vec::new();
    for u in 0..n {
        if profile.demands[u] == 0 {
            continue;
        }
        for (i, &v) in theta.row(u).iter().enumerate() {
            if v > 0.0 && profile.capacities[i] > 0 {
                handles.push((u, i, net.add_edge(u, n + i, 1, -v)));
            }
        }
    }
    for (i, &c) in profile.capacities.iter().enumerate() {
        if c > 0 {
            net.add_edge(n + i, sink, i64::from(c), 0.0);
        }
    }
    net.run_negative_paths(source, sink);

    let mut x = AllocationMatrix::zeros(n, m);
    for (u, i, h) in handles {
        if net.flow_on(h) > 0 {
            x.set(u, i, true);
        }
    }
    let value = allocation_value(&x, theta)?;
    Ok((x, value))
}

/// Exhaustive search over every binary matrix (test oracle).
///
/// Ties go to the lexicographically smallest row-major flattening.
pub fn brute_force_allocation(
    theta: &MeanRewardMatrix,
    profile: &ConstraintProfile,
) -> Result<(AllocationMatrix, f64)> {
    let (n, m) = theta.shape();
    profile.check_shape(n, m)?;
    let cells = n * m;
    if cells > BRUTE_FORCE_MAX_CELLS {
        return Err(Error::TooLarge(format!(
            "{n}x{m} has {cells} cells, enumeration limit is {BRUTE_FORCE_MAX_CELLS}"
        )));
    }
    let mut best = AllocationMatrix::zeros(n, m);
    let mut best_value = 0.0;
    // Entry k of the flattening is bit (cells - 1 - k), so numeric order of
    // masks is lexicographic order of flattenings.
    for mask in 0u32..(1u32 << cells) {
        let mut x = AllocationMatrix::zeros(n, m);
        for k in 0..cells {
            if mask >> (cells - 1 - k) & 1 == 1 {
                x.set(k / m, k % m, true);
            }
        }
        if !validate_allocation(&x, profile)?.feasible {
            continue;
        }
        let value = allocation_value(&x, theta)?;
        if value > best_value + 1e-12 {
            best_value = value;
            best = x;
        }
    }
    Ok((best, best_value))
}
