//! Ground-truth world: synthetic low-rank rewards, Gaussian feedback,
//! per-round capacity/demand sampling and the capacity-drop rule applied to
//! policies that ignore capacities.
//!
//! All randomness comes from explicitly passed generators. A [`World`] owns
//! independent streams for constraints, rewards and drops so that every
//! policy run on the same seed sees the same ground truth and the same
//! sequence of constraint profiles.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{Arm, AllocationMatrix, ConstraintProfile, MeanRewardMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dynamics {
    /// Unit demands and one capacity draw reused every round.
    Static,
    /// Bernoulli demands and fresh capacities every round.
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityRule {
    /// `C_max = ceil(3 / M * sum_u d_u)`, at least 1.
    Paper,
    Fixed(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub rank: usize,
    pub bound: f64,
    pub eta: f64,
    pub dynamics: Dynamics,
    pub p_active: f64,
    pub c_max_rule: CapacityRule,
    /// Sample capacities from `{0, ..., C_max}` instead of `{1, ..., C_max}`.
    pub zero_capacity: bool,
    /// Std of additive Gaussian perturbation of the synthetic matrix (0 = exact rank).
    pub theta_noise: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_users: 60,
            n_items: 30,
            rank: 3,
            bound: 10.0,
            eta: 1.0,
            dynamics: Dynamics::Static,
            p_active: 0.2,
            c_max_rule: CapacityRule::Paper,
            zero_capacity: false,
            theta_noise: 0.0,
            seed: 0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items == 0 {
            return Err(Error::invalid("world dimensions must be positive"));
        }
        if self.rank == 0 || self.rank > self.n_users.min(self.n_items) {
            return Err(Error::invalid(format!(
                "rank {} must be in 1..={}",
                self.rank,
                self.n_users.min(self.n_items)
            )));
        }
        if !(0.0..=1.0).contains(&self.p_active) {
            return Err(Error::invalid(format!("p_active {} outside [0, 1]", self.p_active)));
        }
        if !(self.bound > 0.0) || !(self.eta >= 0.0) || !(self.theta_noise >= 0.0) {
            return Err(Error::invalid("bound must be positive, eta and theta_noise nonnegative"));
        }
        if self.c_max_rule == CapacityRule::Fixed(0) && !self.zero_capacity {
            return Err(Error::invalid("fixed C_max must be at least 1"));
        }
        Ok(())
    }
}

/// Rank-`R` matrix `P Q^T` with uniform `[0, 1]` factors, rescaled so its
/// largest entry equals `B`.
pub fn gen_synthetic_theta<R: Rng>(cfg: &WorldConfig, rng: &mut R) -> Result<MeanRewardMatrix> {
    cfg.validate()?;
    let (n, m, r) = (cfg.n_users, cfg.n_items, cfg.rank);
    let p: Vec<f64> = (0..n * r).map(|_| rng.random::<f64>()).collect();
    let q: Vec<f64> = (0..m * r).map(|_| rng.random::<f64>()).collect();
    let mut theta = MeanRewardMatrix::from_fn(n, m, |u, i| {
        (0..r).map(|k| p[u * r + k] * q[i * r + k]).sum()
    });
    if cfg.theta_noise > 0.0 {
        let noise = Normal::new(0.0, cfg.theta_noise).map_err(|e| Error::invalid(e.to_string()))?;
        for v in theta.as_mut_slice() {
            *v = (*v + noise.sample(rng)).max(0.0);
        }
    }
    let max = theta.max_value();
    let scale = if max > 0.0 { cfg.bound / max } else { 0.0 };
    for v in theta.as_mut_slice() {
        *v = (*v * scale).min(cfg.bound);
    }
    Ok(theta)
}

fn capacity_limit(cfg: &WorldConfig, total_demand: u64) -> u32 {
    match cfg.c_max_rule {
        CapacityRule::Fixed(c) => c,
        CapacityRule::Paper => {
            let m = cfg.n_items as u64;
            // ceil(3 * sum_d / M), floored at 1 so the support is never empty.
            (3 * total_demand).div_ceil(m).max(1) as u32
        }
    }
}

fn draw_capacities<R: Rng>(cfg: &WorldConfig, c_max: u32, rng: &mut R) -> Vec<u32> {
    let lo = if cfg.zero_capacity { 0 } else { 1.min(c_max) };
    (0..cfg.n_items).map(|_| rng.random_range(lo..=c_max)).collect()
}

/// One fresh constraint draw under the configured rule.
///
/// Static: unit demands, `C_max = ceil(3N/M)`. Dynamic: `d_u ~ Bernoulli(p_active)`,
/// `C_max = ceil(3 sum_u d_u / M)`. Capacities are uniform on `{1, ..., C_max}`.
pub fn sample_constraints<R: Rng>(cfg: &WorldConfig, rng: &mut R) -> ConstraintProfile {
    let demands: Vec<u32> = match cfg.dynamics {
        Dynamics::Static => vec![1; cfg.n_users],
        Dynamics::Dynamic => (0..cfg.n_users)
            .map(|_| u32::from(rng.random_bool(cfg.p_active)))
            .collect(),
    };
    let total: u64 = demands.iter().map(|&d| u64::from(d)).sum();
    let c_max = capacity_limit(cfg, total);
    let capacities = draw_capacities(cfg, c_max, rng);
    ConstraintProfile::new(capacities, demands)
}

/// One Gaussian reward per allocated pair, user-major.
pub fn sample_rewards<R: Rng>(
    theta_star: &MeanRewardMatrix,
    x: &AllocationMatrix,
    eta: f64,
    rng: &mut R,
) -> Result<Vec<(usize, usize, f64)>> {
    if theta_star.shape() != x.shape() {
        return Err(Error::dims("allocation does not match the reward matrix"));
    }
    let noise = Normal::new(0.0, eta).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(x.arms()
        .into_iter()
        .map(|(u, i)| {
            let r = if eta == 0.0 {
                theta_star.get(u, i)
            } else {
                theta_star.get(u, i) + noise.sample(rng)
            };
            (u, i, r)
        })
        .collect())
}

/// For every over-subscribed item keep a uniformly random subset of its
/// requesters of size `c_i` and drop the rest.
pub fn apply_capacity_drop<R: Rng>(
    requested: &AllocationMatrix,
    profile: &ConstraintProfile,
    rng: &mut R,
) -> Result<(AllocationMatrix, Vec<Arm>)> {
    let (n, m) = requested.shape();
    profile.check_shape(n, m)?;
    let mut realized = requested.clone();
    let mut dropped = Vec::new();
    for i in 0..m {
        let requesters: Vec<usize> = (0..n).filter(|&u| requested.get(u, i)).collect();
        let cap = profile.capacities[i] as usize;
        if requesters.len() <= cap {
            continue;
        }
        let mut keep = vec![false; requesters.len()];
        for k in index::sample(rng, requesters.len(), cap) {
            keep[k] = true;
        }
        for (k, &u) in requesters.iter().enumerate() {
            if !keep[k] {
                realized.set(u, i, false);
                dropped.push((u, i));
            }
        }
    }
    dropped.sort_unstable();
    Ok((realized, dropped))
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for run `index` under `master`: `master ^ mix64(index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    master ^ mix64(index)
}

/// Independent sub-stream of `seed` identified by `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_THETA: u64 = 1;
const STREAM_CONSTRAINTS: u64 = 2;
const STREAM_REWARDS: u64 = 3;
const STREAM_DROPS: u64 = 4;

/// A seeded ground-truth world.
#[derive(Debug, Clone)]
pub struct World {
    cfg: WorldConfig,
    theta: MeanRewardMatrix,
    constraint_rng: ChaCha8Rng,
    reward_rng: ChaCha8Rng,
    drop_rng: ChaCha8Rng,
    static_profile: Option<ConstraintProfile>,
}

impl World {
    /// Synthetic world drawn from `cfg.seed`.
    pub fn synthetic(cfg: WorldConfig) -> Result<Self> {
        let theta = gen_synthetic_theta(&cfg, &mut stream_rng(cfg.seed, STREAM_THETA))?;
        Self::with_theta(cfg, theta)
    }

    /// World around a given ground truth (e.g. a completed rating matrix).
    pub fn with_theta(cfg: WorldConfig, theta: MeanRewardMatrix) -> Result<Self> {
        if theta.shape() != (cfg.n_users, cfg.n_items) {
            return Err(Error::dims("ground truth does not match world dimensions"));
        }
        theta.validate_ground_truth(cfg.bound)?;
        Ok(Self {
            constraint_rng: stream_rng(cfg.seed, STREAM_CONSTRAINTS),
            reward_rng: stream_rng(cfg.seed, STREAM_REWARDS),
            drop_rng: stream_rng(cfg.seed, STREAM_DROPS),
            static_profile: None,
            theta,
            cfg,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn theta(&self) -> &MeanRewardMatrix {
        &self.theta
    }

    /// Constraint profile for round `t`; static worlds draw once and reuse it.
    pub fn constraints(&mut self, _t: u64) -> ConstraintProfile {
        match self.cfg.dynamics {
            Dynamics::Static => self
                .static_profile
                .get_or_insert_with(|| sample_constraints(&self.cfg, &mut self.constraint_rng))
                .clone(),
            Dynamics::Dynamic => sample_constraints(&self.cfg, &mut self.constraint_rng),
        }
    }

    pub fn rewards(&mut self, x: &AllocationMatrix) -> Result<Vec<(usize, usize, f64)>> {
        sample_rewards(&self.theta, x, self.cfg.eta, &mut self.reward_rng)
    }

    pub fn capacity_drop(
        &mut self,
        requested: &AllocationMatrix,
        profile: &ConstraintProfile,
    ) -> Result<(AllocationMatrix, Vec<Arm>)> {
        apply_capacity_drop(requested, profile, &mut self.drop_rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_allocation;

    fn cfg(n: usize, m: usize, r: usize) -> WorldConfig {
        WorldConfig {
            n_users: n,
            n_items: m,
            rank: r,
            ..WorldConfig::default()
        }
    }

    fn numerical_rank(theta: &MeanRewardMatrix) -> usize {
        let (n, m) = theta.shape();
        let mat = nalgebra::DMatrix::from_row_slice(n, m, theta.as_slice());
        mat.singular_values().iter().filter(|&&s| s > 1e-9).count()
    }

    #[test]
    fn one_by_one_is_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let theta = gen_synthetic_theta(&cfg(1, 1, 1), &mut rng).unwrap();
        assert_eq!(theta.get(0, 0), 10.0);
    }

    #[test]
    fn synthetic_box_rank_and_determinism() {
        let c = cfg(12, 9, 3);
        let a = gen_synthetic_theta(&c, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = gen_synthetic_theta(&c, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        a.validate_ground_truth(10.0).unwrap();
        assert_eq!(a.max_value(), 10.0);
        assert!(numerical_rank(&a) <= 3);
    }

    #[test]
    fn rejects_excess_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gen_synthetic_theta(&cfg(2, 3, 3), &mut rng).is_err());
    }

    #[test]
    fn static_profile_rule() {
        let c = cfg(4, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = sample_constraints(&c, &mut rng);
            assert_eq!(p.demands, vec![1, 1, 1, 1]);
            assert!(p.capacities.iter().all(|&x| (1..=6).contains(&x)));
        }
    }

    #[test]
    fn static_world_reuses_profile() {
        let mut w = World::synthetic(cfg(8, 4, 2)).unwrap();
        let first = w.constraints(1);
        for t in 2..20 {
            assert_eq!(w.constraints(t), first);
        }
    }

    #[test]
    fn inactive_round_floors_cmax() {
        let c = WorldConfig {
            dynamics: Dynamics::Dynamic,
            p_active: 0.0,
            ..cfg(5, 3, 1)
        };
        let p = sample_constraints(&c, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(p.demands, vec![0; 5]);
        assert_eq!(p.capacities, vec![1; 3]);
    }

    #[test]
    fn dynamic_profile_rule() {
        let c = WorldConfig {
            dynamics: Dynamics::Dynamic,
            p_active: 0.3,
            ..cfg(40, 7, 2)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = sample_constraints(&c, &mut rng);
            let sum: u32 = p.demands.iter().sum();
            let c_max = ((3 * sum) as f64 / 7.0).ceil().max(1.0) as u32;
            assert!(p.demands.iter().all(|&d| d <= 1));
            assert!(p.capacities.iter().all(|&x| (1..=c_max).contains(&x)));
        }
    }

    #[test]
    fn noiseless_rewards_equal_means() {
        let theta = MeanRewardMatrix::from_rows(&[[1.5, 2.5]]).unwrap();
        let x = AllocationMatrix::ones(1, 2);
        let r = sample_rewards(&theta, &x, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(r, vec![(0, 0, 1.5), (0, 1, 2.5)]);
        let none = sample_rewards(&theta, &AllocationMatrix::zeros(1, 2), 1.0, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn reward_mean_monte_carlo() {
        let theta = MeanRewardMatrix::from_rows(&[[3.7]]).unwrap();
        let x = AllocationMatrix::ones(1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_rewards(&theta, &x, 1.0, &mut rng).unwrap()[0].2)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 3.7).abs() < 0.02, "{mean}");
    }

    #[test]
    fn drop_is_identity_when_feasible() {
        let x = AllocationMatrix::from_arms(3, 2, &[(0, 0), (1, 1)]).unwrap();
        let p = ConstraintProfile::new(vec![1, 1], vec![1, 1, 1]);
        let (real, dropped) = apply_capacity_drop(&x, &p, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(real, x);
        assert!(dropped.is_empty());
    }

    #[test]
    fn drop_zero_capacity_removes_all() {
        let x = AllocationMatrix::from_arms(3, 1, &[(0, 0), (2, 0)]).unwrap();
        let p = ConstraintProfile::new(vec![0], vec![1, 1, 1]);
        let (real, dropped) = apply_capacity_drop(&x, &p, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(real.count(), 0);
        assert_eq!(dropped, vec![(0, 0), (2, 0)]);
    }

    #[test]
    fn drop_is_uniform() {
        let x = AllocationMatrix::ones(3, 1);
        let p = ConstraintProfile::new(vec![1], vec![1, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 10_000;
        let mut kept = [0usize; 3];
        for _ in 0..trials {
            let (real, dropped) = apply_capacity_drop(&x, &p, &mut rng).unwrap();
            assert_eq!(real.count(), 1);
            assert_eq!(dropped.len(), 2);
            assert!(validate_allocation(&real, &p).unwrap().feasible);
            for u in 0..3 {
                kept[u] += usize::from(real.get(u, 0));
            }
        }
        for k in kept {
            assert!((k as f64 / trials as f64 - 1.0 / 3.0).abs() < 0.02, "{kept:?}");
        }
    }

    #[test]
    fn seed_derivation_is_stable() {
        assert_eq!(derive_seed(42, 0), 42 ^ mix64(0));
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
    }
}
