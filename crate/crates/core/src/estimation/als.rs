//! Regularized least squares over rank-`R` factorizations by alternating
//! exact block minimization.
//!
//! Objective: `sum_records (p_u . q_i - r)^2 + gamma ||P Q^T - Theta_bar||_F^2`.
//! With per-pair aggregates this is a weighted fit with weight `n_ui + gamma`
//! toward `(S_ui + gamma theta_bar_ui) / (n_ui + gamma)`, so each user row
//! (item row) solves one `R x R` system.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, SpdSystem};
use crate::model::{Hyperparams, MeanRewardMatrix, ObservationLog};

/// User factors `P` (`N x R`) and item factors `Q` (`M x R`), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    rank: usize,
    users: Vec<f64>,
    items: Vec<f64>,
}

impl FactorPair {
    pub fn new(rank: usize, users: Vec<f64>, items: Vec<f64>) -> Result<Self> {
        if rank == 0 || !users.len().is_multiple_of(rank) || !items.len().is_multiple_of(rank) {
            return Err(Error::dims("factor lengths must be multiples of the rank"));
        }
        Ok(Self { rank, users, items })
    }

    /// Entries i.i.d. uniform on `[0, sqrt(bound / rank)]`.
    pub fn random<R: Rng>(n: usize, m: usize, rank: usize, bound: f64, rng: &mut R) -> Self {
        let hi = (bound / rank as f64).sqrt().max(f64::MIN_POSITIVE);
        let mut draw = |len: usize| (0..len).map(|_| rng.random_range(0.0..=hi)).collect();
        Self {
            rank,
            users: draw(n * rank),
            items: draw(m * rank),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_users(&self) -> usize {
        self.users.len() / self.rank
    }

    pub fn n_items(&self) -> usize {
        self.items.len() / self.rank
    }

    pub fn user(&self, u: usize) -> &[f64] {
        &self.users[u * self.rank..(u + 1) * self.rank]
    }

    pub fn item(&self, i: usize) -> &[f64] {
        &self.items[i * self.rank..(i + 1) * self.rank]
    }

    pub fn users(&self) -> &[f64] {
        &self.users
    }

    pub fn items(&self) -> &[f64] {
        &self.items
    }

    pub fn users_mut(&mut self) -> &mut [f64] {
        &mut self.users
    }

    pub fn items_mut(&mut self) -> &mut [f64] {
        &mut self.items
    }

    /// `P Q^T`.
    pub fn product(&self) -> MeanRewardMatrix {
        MeanRewardMatrix::from_fn(self.n_users(), self.n_items(), |u, i| {
            dot(self.user(u), self.item(i))
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FactorInit<'a> {
    Warm(&'a FactorPair),
    Seed(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlsOptions {
    pub max_sweeps: usize,
    /// Stop when one sweep lowers the objective by less than this fraction.
    pub rel_tol: f64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlsFit {
    pub factors: FactorPair,
    /// `P Q^T` clipped to `[0, B]`.
    pub estimate: MeanRewardMatrix,
    /// Objective at the starting factors followed by its value after each sweep.
    pub trace: Vec<f64>,
}

/// Weighted row-wise targets shared by the estimator and the objective.
struct WeightedTargets {
    n: usize,
    m: usize,
    /// `n_ui + gamma`, user-major.
    weights: Vec<f64>,
    /// `S_ui + gamma theta_bar_ui`, user-major.
    rhs: Vec<f64>,
    /// Part of the objective no factorization can change.
    constant: f64,
    gamma: f64,
    theta_bar: Option<MeanRewardMatrix>,
    log_counts: Vec<f64>,
    log_means: Vec<f64>,
}

impl WeightedTargets {
    fn new(log: &ObservationLog, gamma: f64, theta_bar: Option<&MeanRewardMatrix>) -> Self {
        let (n, m) = (log.n_users(), log.n_items());
        let mut weights = Vec::with_capacity(n * m);
        let mut rhs = Vec::with_capacity(n * m);
        let mut log_counts = Vec::with_capacity(n * m);
        let mut log_means = Vec::with_capacity(n * m);
        let mut constant = 0.0;
        for k in 0..n * m {
            let cnt = f64::from(log.counts()[k]);
            let sum = log.sums()[k];
            let bar = theta_bar.map_or(0.0, |b| b.as_slice()[k]);
            weights.push(cnt + gamma);
            rhs.push(sum + gamma * bar);
            log_counts.push(cnt);
            if cnt > 0.0 {
                let mean = sum / cnt;
                log_means.push(mean);
                // Within-pair scatter: sum r^2 - (sum r)^2 / n, never negative.
                constant += (log.sq_sums()[k] - sum * mean).max(0.0);
            } else {
                log_means.push(0.0);
            }
        }
        Self {
            n,
            m,
            weights,
            rhs,
            constant,
            gamma,
            theta_bar: theta_bar.cloned(),
            log_counts,
            log_means,
        }
    }

    fn objective(&self, f: &FactorPair) -> f64 {
        let mut total = self.constant;
        for u in 0..self.n {
            let p = f.user(u);
            for i in 0..self.m {
                let k = u * self.m + i;
                let pred = dot(p, f.item(i));
                let cnt = self.log_counts[k];
                if cnt > 0.0 {
                    let r = pred - self.log_means[k];
                    total += cnt * r * r;
                }
                let bar = self.theta_bar.as_ref().map_or(0.0, |b| b.as_slice()[k]);
                let g = pred - bar;
                total += self.gamma * g * g;
            }
        }
        total
    }

    fn update_users(&self, f: &mut FactorPair, sys: &mut SpdSystem) {
        let r = f.rank;
        for u in 0..self.n {
            sys.reset();
            for i in 0..self.m {
                let k = u * self.m + i;
                sys.accumulate(f.item(i), self.weights[k], self.rhs[k]);
            }
            let p = sys.solve();
            f.users[u * r..(u + 1) * r].copy_from_slice(&p);
        }
    }

    fn update_items(&self, f: &mut FactorPair, sys: &mut SpdSystem) {
        let r = f.rank;
        for i in 0..self.m {
            sys.reset();
            for u in 0..self.n {
                let k = u * self.m + i;
                sys.accumulate(f.user(u), self.weights[k], self.rhs[k]);
            }
            let q = sys.solve();
            f.items[i * r..(i + 1) * r].copy_from_slice(&q);
        }
    }
}

fn check_inputs(
    log: &ObservationLog,
    rank: usize,
    gamma: f64,
    theta_bar: Option<&MeanRewardMatrix>,
) -> Result<()> {
    let (n, m) = (log.n_users(), log.n_items());
    if rank == 0 || rank > n.min(m) {
        return Err(Error::invalid(format!("rank {rank} must be in 1..={}", n.min(m))));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("gamma {gamma} must be positive")));
    }
    if let Some(bar) = theta_bar {
        if bar.shape() != (n, m) {
            return Err(Error::dims("initial estimate shape differs from the log"));
        }
    }
    Ok(())
}

/// Regularized least-squares estimate of the reward matrix.
///
/// With an empty log the estimate is `theta_bar` (or zero) clipped to
/// `[0, B]`, and the starting factors are returned untouched.
pub fn als_least_squares(
    log: &ObservationLog,
    hp: &Hyperparams,
    theta_bar: Option<&MeanRewardMatrix>,
    init: FactorInit<'_>,
    options: &AlsOptions,
) -> Result<AlsFit> {
    check_inputs(log, hp.rank, hp.gamma, theta_bar)?;
    let (n, m) = (log.n_users(), log.n_items());
    let mut factors = match init {
        FactorInit::Warm(f) => {
            if f.rank() != hp.rank || f.n_users() != n || f.n_items() != m {
                return Err(Error::dims("warm-start factors do not match the log"));
            }
            f.clone()
        }
        FactorInit::Seed(seed) => {
            FactorPair::random(n, m, hp.rank, hp.bound, &mut ChaCha8Rng::seed_from_u64(seed))
        }
    };

    if log.is_empty() {
        let estimate = theta_bar
            .cloned()
            .unwrap_or_else(|| MeanRewardMatrix::zeros(n, m))
            .clipped(0.0, hp.bound);
        return Ok(AlsFit {
            factors,
            estimate,
            trace: Vec::new(),
        });
    }

    let targets = WeightedTargets::new(log, hp.gamma, theta_bar);
    let mut sys = SpdSystem::new(hp.rank);
    let mut trace = vec![targets.objective(&factors)];
    for _ in 0..options.max_sweeps {
        targets.update_users(&mut factors, &mut sys);
        targets.update_items(&mut factors, &mut sys);
        let obj = targets.objective(&factors);
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(obj);
        if prev - obj <= options.rel_tol * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let estimate = factors.product().clipped(0.0, hp.bound);
    Ok(AlsFit {
        factors,
        estimate,
        trace,
    })
}

/// The least-squares objective at `factors`.
pub fn als_objective(
    log: &ObservationLog,
    factors: &FactorPair,
    gamma: f64,
    theta_bar: Option<&MeanRewardMatrix>,
) -> Result<f64> {
    check_inputs(log, factors.rank(), gamma, theta_bar)?;
    Ok(WeightedTargets::new(log, gamma, theta_bar).objective(factors))
}

/// Gradient of [`als_objective`] with respect to the user factors, `N x R`.
pub fn als_user_gradient(
    log: &ObservationLog,
    factors: &FactorPair,
    gamma: f64,
    theta_bar: Option<&MeanRewardMatrix>,
) -> Result<Vec<f64>> {
    check_inputs(log, factors.rank(), gamma, theta_bar)?;
    let t = WeightedTargets::new(log, gamma, theta_bar);
    let r = factors.rank();
    let mut grad = vec![0.0; t.n * r];
    for u in 0..t.n {
        for i in 0..t.m {
            let k = u * t.m + i;
            let q = factors.item(i);
            let coef = 2.0 * (t.weights[k] * dot(factors.user(u), q) - t.rhs[k]);
            for j in 0..r {
                grad[u * r + j] += coef * q[j];
            }
        }
    }
    Ok(grad)
}
