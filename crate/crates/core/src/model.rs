//! Shared data model: reward matrices, allocations, per-round constraints and
//! the observation history, plus the feasibility, value and regret primitives
//! every other module builds on.
//!
//! Matrices are dense and user-major (row `u` holds user `u`'s items).
//! Rewards are `f64`; feasibility is checked in exact integer arithmetic.

use crate::error::{Error, Result};

/// A user-item pair `(u, i)`.
pub type Arm = (usize, usize);

/// Dense `N x M` matrix of mean rewards (ground truth or an estimate).
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRewardMatrix {
    n_users: usize,
    n_items: usize,
    values: Vec<f64>,
}

impl MeanRewardMatrix {
    pub fn new(n_users: usize, n_items: usize, values: Vec<f64>) -> Result<Self> {
        if n_users == 0 || n_items == 0 {
            return Err(Error::invalid("reward matrix must have positive dimensions"));
        }
        if values.len() != n_users * n_items {
            return Err(Error::dims(format!(
                "expected {} values for a {n_users}x{n_items} matrix, got {}",
                n_users * n_items,
                values.len()
            )));
        }
        Ok(Self {
            n_users,
            n_items,
            values,
        })
    }

    pub fn zeros(n_users: usize, n_items: usize) -> Self {
        Self::filled(n_users, n_items, 0.0)
    }

    pub fn filled(n_users: usize, n_items: usize, value: f64) -> Self {
        assert!(n_users > 0 && n_items > 0, "reward matrix must be non-empty");
        Self {
            n_users,
            n_items,
            values: vec![value; n_users * n_items],
        }
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_users = rows.len();
        let n_items = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n_users * n_items);
        for (u, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_items {
                return Err(Error::dims(format!(
                    "row {u} has {} entries, expected {n_items}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(n_users, n_items, values)
    }

    pub fn from_fn(n_users: usize, n_items: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n_users * n_items);
        for u in 0..n_users {
            for i in 0..n_items {
                values.push(f(u, i));
            }
        }
        Self {
            n_users,
            n_items,
            values,
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_users, self.n_items)
    }

    #[inline]
    pub fn get(&self, u: usize, i: usize) -> f64 {
        self.values[u * self.n_items + i]
    }

    #[inline]
    pub fn set(&mut self, u: usize, i: usize, v: f64) {
        self.values[u * self.n_items + i] = v;
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.values[u * self.n_items..(u + 1) * self.n_items]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Entrywise clip into `[lo, hi]`.
    pub fn clipped(&self, lo: f64, hi: f64) -> Self {
        Self {
            n_users: self.n_users,
            n_items: self.n_items,
            values: self.values.iter().map(|v| v.clamp(lo, hi)).collect(),
        }
    }

    /// `self - other`, entrywise.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            n_users: self.n_users,
            n_items: self.n_items,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `a * self + b * other`, entrywise.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            n_users: self.n_users,
            n_items: self.n_items,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Checks the ground-truth box `[0, bound]` on every entry.
    pub fn validate_ground_truth(&self, bound: f64) -> Result<()> {
        for (k, &v) in self.values.iter().enumerate() {
            if !(0.0..=bound).contains(&v) {
                return Err(Error::invalid(format!(
                    "ground-truth entry ({}, {}) = {v} outside [0, {bound}]",
                    k / self.n_items,
                    k % self.n_items
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dims(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

/// Binary `N x M` allocation matrix. Equivalent to the set of played arms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AllocationMatrix {
    n_users: usize,
    n_items: usize,
    entries: Vec<bool>,
}

impl AllocationMatrix {
    pub fn zeros(n_users: usize, n_items: usize) -> Self {
        Self {
            n_users,
            n_items,
            entries: vec![false; n_users * n_items],
        }
    }

    pub fn ones(n_users: usize, n_items: usize) -> Self {
        Self {
            n_users,
            n_items,
            entries: vec![true; n_users * n_items],
        }
    }

    /// The single-entry basis matrix with a one at `(u, i)`.
    pub fn unit(n_users: usize, n_items: usize, u: usize, i: usize) -> Self {
        let mut x = Self::zeros(n_users, n_items);
        x.set(u, i, true);
        x
    }

    pub fn from_arms(n_users: usize, n_items: usize, arms: &[Arm]) -> Result<Self> {
        let mut x = Self::zeros(n_users, n_items);
        for &(u, i) in arms {
            if u >= n_users || i >= n_items {
                return Err(Error::dims(format!(
                    "arm ({u}, {i}) outside {n_users}x{n_items}"
                )));
            }
            x.set(u, i, true);
        }
        Ok(x)
    }

    /// Builds from 0/1 rows; any nonzero entry other than 1 is rejected.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n_users = rows.len();
        let n_items = rows.first().map_or(0, |r| r.as_ref().len());
        let mut x = Self::zeros(n_users, n_items);
        for (u, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_items {
                return Err(Error::dims(format!("row {u} has wrong length")));
            }
            for (i, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => x.set(u, i, true),
                    _ => return Err(Error::invalid(format!("entry ({u}, {i}) = {v} is not binary"))),
                }
            }
        }
        Ok(x)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_users, self.n_items)
    }

    #[inline]
    pub fn get(&self, u: usize, i: usize) -> bool {
        self.entries[u * self.n_items + i]
    }

    #[inline]
    pub fn set(&mut self, u: usize, i: usize, v: bool) {
        self.entries[u * self.n_items + i] = v;
    }

    pub fn row(&self, u: usize) -> &[bool] {
        &self.entries[u * self.n_items..(u + 1) * self.n_items]
    }

    pub fn entries(&self) -> &[bool] {
        &self.entries
    }

    /// Played arms in user-major order.
    pub fn arms(&self) -> Vec<Arm> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(k, _)| (k / self.n_items, k % self.n_items))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.entries.iter().filter(|&&b| b).count()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.n_users)
            .map(|u| self.row(u).iter().filter(|&&b| b).count() as u64)
            .collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.n_items];
        for u in 0..self.n_users {
            for (i, &on) in self.row(u).iter().enumerate() {
                if on {
                    sums[i] += 1;
                }
            }
        }
        sums
    }

    /// Row-major 0/1 flattening.
    pub fn to_bits(&self) -> Vec<u8> {
        self.entries.iter().map(|&b| b as u8).collect()
    }
}

/// Per-round item capacities `c_t` and user demands `d_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintProfile {
    pub capacities: Vec<u32>,
    pub demands: Vec<u32>,
}

impl ConstraintProfile {
    pub fn new(capacities: Vec<u32>, demands: Vec<u32>) -> Self {
        Self {
            capacities,
            demands,
        }
    }

    pub fn n_users(&self) -> usize {
        self.demands.len()
    }

    pub fn n_items(&self) -> usize {
        self.capacities.len()
    }

    pub fn check_shape(&self, n_users: usize, n_items: usize) -> Result<()> {
        if self.demands.len() != n_users || self.capacities.len() != n_items {
            return Err(Error::dims(format!(
                "profile has {} demands / {} capacities, expected {n_users} / {n_items}",
                self.demands.len(),
                self.capacities.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Row sum exceeded a user's demand.
    Demand,
    /// Column sum exceeded an item's capacity.
    Capacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub index: usize,
    pub excess: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

pub fn validate_allocation(
    x: &AllocationMatrix,
    profile: &ConstraintProfile,
) -> Result<FeasibilityReport> {
    profile.check_shape(x.n_users(), x.n_items())?;
    let mut violations = Vec::new();
    for (u, (&s, &d)) in x.row_sums().iter().zip(&profile.demands).enumerate() {
        if s > u64::from(d) {
            violations.push(Violation {
                kind: ConstraintKind::Demand,
                index: u,
                excess: s - u64::from(d),
            });
        }
    }
    for (i, (&s, &c)) in x.col_sums().iter().zip(&profile.capacities).enumerate() {
        if s > u64::from(c) {
            violations.push(Violation {
                kind: ConstraintKind::Capacity,
                index: i,
                excess: s - u64::from(c),
            });
        }
    }
    Ok(FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    })
}

/// Frobenius inner product `<X, Theta>`.
pub fn allocation_value(x: &AllocationMatrix, theta: &MeanRewardMatrix) -> Result<f64> {
    if x.shape() != theta.shape() {
        return Err(Error::dims(format!(
            "allocation {:?} vs rewards {:?}",
            x.shape(),
            theta.shape()
        )));
    }
    Ok(x
        .entries()
        .iter()
        .zip(theta.as_slice())
        .filter(|(&on, _)| on)
        .map(|(_, &v)| v)
        .sum())
}

/// `<X*, Theta*> - <X, Theta*>` for one round.
pub fn round_regret(
    x: &AllocationMatrix,
    x_star: &AllocationMatrix,
    theta_star: &MeanRewardMatrix,
) -> Result<f64> {
    Ok(allocation_value(x_star, theta_star)? - allocation_value(x, theta_star)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub round: u64,
    pub user: usize,
    pub item: usize,
    pub reward: f64,
}

/// Append-only history of observed rewards with per-pair aggregates.
#[derive(Debug, Clone)]
pub struct ObservationLog {
    n_users: usize,
    n_items: usize,
    records: Vec<Observation>,
    counts: Vec<u32>,
    sums: Vec<f64>,
    sq_sums: Vec<f64>,
}

impl ObservationLog {
    pub fn new(n_users: usize, n_items: usize) -> Self {
        let len = n_users * n_items;
        Self {
            n_users,
            n_items,
            records: Vec::new(),
            counts: vec![0; len],
            sums: vec![0.0; len],
            sq_sums: vec![0.0; len],
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn push(&mut self, round: u64, user: usize, item: usize, reward: f64) -> Result<()> {
        if user >= self.n_users || item >= self.n_items {
            return Err(Error::dims(format!(
                "observation ({user}, {item}) outside {}x{}",
                self.n_users, self.n_items
            )));
        }
        if !reward.is_finite() {
            return Err(Error::invalid(format!("non-finite reward {reward}")));
        }
        if let Some(last) = self.records.last() {
            if round < last.round {
                return Err(Error::invalid(format!(
                    "round {round} precedes last logged round {}",
                    last.round
                )));
            }
        }
        let k = user * self.n_items + item;
        self.counts[k] += 1;
        self.sums[k] += reward;
        self.sq_sums[k] += reward * reward;
        self.records.push(Observation {
            round,
            user,
            item,
            reward,
        });
        Ok(())
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Pull counts `n_{u,i}`, user-major.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count(&self, u: usize, i: usize) -> u32 {
        self.counts[u * self.n_items + i]
    }

    /// Per-pair reward sums, user-major.
    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn sq_sums(&self) -> &[f64] {
        &self.sq_sums
    }

    /// Empirical mean of one pair, `None` when it was never observed.
    pub fn mean(&self, u: usize, i: usize) -> Option<f64> {
        let k = u * self.n_items + i;
        (self.counts[k] > 0).then(|| self.sums[k] / f64::from(self.counts[k]))
    }
}

/// Confidence-set and model hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    /// Sub-Gaussian noise scale.
    pub eta: f64,
    /// Upper bound on mean rewards.
    pub bound: f64,
    /// Error radius of the initial estimate.
    pub init_radius: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Covering discretization scale.
    pub alpha_cover: f64,
    pub rank: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            bound: 10.0,
            init_radius: 0.0,
            gamma: 1.0,
            delta: 0.1,
            alpha_cover: 0.01,
            rank: 1,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eta >= 0.0
            && self.bound > 0.0
            && self.init_radius >= 0.0
            && self.gamma > 0.0
            && self.delta > 0.0
            && self.delta < 1.0
            && self.alpha_cover > 0.0
            && self.rank >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid hyperparameters {self:?}")))
        }
    }
}
