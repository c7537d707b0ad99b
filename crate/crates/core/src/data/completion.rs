//! Rank-`R` completion of a sparse rating matrix by alternating ridge
//! regressions on the observed entries.

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimation::FactorPair;
use crate::linalg::{dot, SpdSystem};
use crate::model::MeanRewardMatrix;

use super::SparseRatings;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionOptions {
    pub rank: usize,
    /// Weight of `||P||^2 + ||Q||^2`.
    pub reg: f64,
    pub sweeps: usize,
    /// Stop early when a sweep lowers the objective by less than this fraction.
    pub rel_tol: f64,
}

impl Default for CompletionOptions {
    fn default() -> Self {
        Self {
            rank: 5,
            reg: 0.1,
            sweeps: 50,
            rel_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Completion {
    /// `P Q^T` clipped to the rating range.
    pub theta: MeanRewardMatrix,
    pub factors: FactorPair,
    /// Objective at the initial factors, then after each sweep.
    pub objective: Vec<f64>,
    /// Root-mean-square error on the observed entries, aligned with `objective`.
    pub rmse: Vec<f64>,
}

/// Fills every entry of `ratings` with a rank-`rank` fit.
pub fn complete_matrix<R: Rng>(
    ratings: &SparseRatings,
    options: &CompletionOptions,
    rng: &mut R,
) -> Result<Completion> {
    let (n, m, rank) = (ratings.n_users, ratings.n_items, options.rank);
    if rank == 0 || rank > n.min(m) {
        return Err(Error::invalid(format!("rank {rank} must lie in 1..={}", n.min(m))));
    }
    if ratings.is_empty() {
        return Err(Error::invalid("no observed ratings to complete"));
    }
    if !(options.reg >= 0.0) {
        return Err(Error::invalid(format!("regularizer {} must be nonnegative", options.reg)));
    }
    ratings.validate()?;

    let mut by_user: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut by_item: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for &(u, i, r) in &ratings.triples {
        by_user[u].push((i, r));
        by_item[i].push((u, r));
    }

    let (lo, hi) = ratings.rating_range;
    let mut factors = FactorPair::random(n, m, rank, hi.max(f64::MIN_POSITIVE), rng);
    let mut sys = SpdSystem::new(rank);
    let (first_obj, first_rmse) = fit_stats(ratings, &factors, options.reg);
    let mut objective = vec![first_obj];
    let mut rmse = vec![first_rmse];
    for _ in 0..options.sweeps {
        let items = factors.items().to_vec();
        ridge_rows(&by_user, &items, factors.users_mut(), rank, options.reg, &mut sys);
        let users = factors.users().to_vec();
        ridge_rows(&by_item, &users, factors.items_mut(), rank, options.reg, &mut sys);
        let (obj, err) = fit_stats(ratings, &factors, options.reg);
        let prev = *objective.last().expect("objective starts non-empty");
        objective.push(obj);
        rmse.push(err);
        if prev - obj <= options.rel_tol * prev.abs() {
            break;
        }
    }
    Ok(Completion {
        theta: factors.product().clipped(lo, hi),
        factors,
        objective,
        rmse,
    })
}

/// Solves `(sum v v^T + reg I) x = sum r v` for every row of `rows`.
fn ridge_rows(
    rows: &[Vec<(usize, f64)>],
    other: &[f64],
    out: &mut [f64],
    rank: usize,
    reg: f64,
    sys: &mut SpdSystem,
) {
    for (row, entries) in rows.iter().enumerate() {
        sys.reset();
        sys.add_diagonal(reg);
        for &(j, r) in entries {
            sys.accumulate(&other[j * rank..(j + 1) * rank], 1.0, r);
        }
        let x = sys.solve();
        out[row * rank..(row + 1) * rank].copy_from_slice(&x);
    }
}

fn fit_stats(ratings: &SparseRatings, f: &FactorPair, reg: f64) -> (f64, f64) {
    let sse: f64 = ratings
        .triples
        .iter()
        .map(|&(u, i, r)| (dot(f.user(u), f.item(i)) - r).powi(2))
        .sum();
    let penalty = reg * (dot(f.users(), f.users()) + dot(f.items(), f.items()));
    (sse + penalty, (sse / ratings.len() as f64).sqrt())
}
