//! Interactive collaborative filtering: one ridge linear UCB per user over
//! item factors learned from the policy's own log. Capacities are ignored.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::estimation::{als_least_squares, FactorInit, FactorPair};
use crate::linalg::{dot, solve_with, SpdSystem};
use crate::model::{AllocationMatrix, ConstraintProfile, Hyperparams, MeanRewardMatrix, ObservationLog};

use super::{History, Policy, PolicyKind, PolicyParams, RoundFeedback, WorldInfo};

pub struct Icf {
    params: PolicyParams,
    world: WorldInfo,
    hp: Hyperparams,
    prior: MeanRewardMatrix,
    factors: FactorPair,
    history: History,
}

impl Icf {
    pub fn new(params: PolicyParams, world: WorldInfo, seed: u64) -> Self {
        let hp = world.hyperparams(&params);
        let factors = FactorPair::random(
            world.n_users,
            world.n_items,
            params.rank,
            world.bound,
            &mut ChaCha8Rng::seed_from_u64(seed),
        );
        Self {
            prior: world.prior(&params),
            history: History::new(world.n_users, world.n_items),
            params,
            world,
            hp,
            factors,
        }
    }

    fn zero_on_drop(&self) -> bool {
        self.params.kind == PolicyKind::Icf2
    }

    /// Refits the item features every `refit_every` rounds once data exists.
    fn maybe_refit(&mut self) -> Result<()> {
        let t = self.history.round;
        if self.history.log.is_empty() || !(t - 1).is_multiple_of(self.params.refit_every as u64) {
            return Ok(());
        }
        let fit = als_least_squares(
            &self.history.log,
            &self.hp,
            Some(&self.prior),
            FactorInit::Warm(&self.factors),
            &self.params.als,
        )?;
        self.factors = fit.factors;
        Ok(())
    }

    /// Linear-UCB scores of every item for user `u`.
    fn user_scores(&self, u: usize, alpha: f64, sys: &mut SpdSystem) -> Vec<f64> {
        let log = &self.history.log;
        let m = self.world.n_items;
        sys.reset();
        sys.add_diagonal(self.params.icf_ridge);
        for i in 0..m {
            let k = u * m + i;
            let n = log.counts()[k];
            if n > 0 {
                sys.accumulate(self.factors.item(i), f64::from(n), log.sums()[k]);
            }
        }
        let chol = sys.cholesky();
        let weights = solve_with(&chol, &sys.b);
        (0..m)
            .map(|i| {
                let q = self.factors.item(i);
                let width = dot(q, &solve_with(&chol, q)).max(0.0).sqrt();
                dot(q, &weights) + alpha * width
            })
            .collect()
    }
}

impl Policy for Icf {
    fn name(&self) -> &str {
        &self.params.name
    }

    fn kind(&self) -> PolicyKind {
        self.params.kind
    }

    fn round(&self) -> u64 {
        self.history.round
    }

    fn log(&self) -> &ObservationLog {
        &self.history.log
    }

    fn select(&mut self, profile: &ConstraintProfile) -> Result<AllocationMatrix> {
        let (n, m) = (self.world.n_users, self.world.n_items);
        profile.check_shape(n, m)?;
        self.maybe_refit()?;
        let t = self.history.round as f64;
        let alpha =
            self.params.kappa_icf * self.world.eta * (self.params.rank as f64 * t.ln()).sqrt();
        let mut sys = SpdSystem::new(self.params.rank);
        let mut x = AllocationMatrix::zeros(n, m);
        for u in 0..n {
            let d = (profile.demands[u] as usize).min(m);
            if d == 0 {
                continue;
            }
            let scores = self.user_scores(u, alpha, &mut sys);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
            for &i in &order[..d] {
                x.set(u, i, true);
            }
        }
        self.history.requested(&x);
        Ok(x)
    }

    fn update(&mut self, feedback: &RoundFeedback) -> Result<()> {
        self.history.record(feedback, self.zero_on_drop())
    }
}
