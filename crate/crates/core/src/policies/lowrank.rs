//! LR-COMB and its plug-in ablation ACF, which share the low-rank estimator.

use crate::error::Result;
use crate::estimation::{
    als_least_squares, beta_star, optimistic_allocation, practical_beta, ConfidenceSpec,
    FactorInit, FactorPair, OptimismOptions,
};
use crate::model::{AllocationMatrix, ConstraintProfile, Hyperparams, MeanRewardMatrix, ObservationLog};

use super::{History, Policy, PolicyKind, PolicyParams, RadiusRule, RoundFeedback, WorldInfo};

pub struct LowRank {
    params: PolicyParams,
    world: WorldInfo,
    hp: Hyperparams,
    prior: MeanRewardMatrix,
    factors: Option<FactorPair>,
    seed: u64,
    history: History,
    last_beta: f64,
}

impl LowRank {
    pub fn new(params: PolicyParams, world: WorldInfo, seed: u64) -> Result<Self> {
        let hp = world.hyperparams(&params);
        hp.validate()?;
        Ok(Self {
            prior: world.prior(&params),
            history: History::new(world.n_users, world.n_items),
            factors: None,
            last_beta: 0.0,
            params,
            world,
            hp,
            seed,
        })
    }

    /// Factors from the most recent fit.
    pub fn factors(&self) -> Option<&FactorPair> {
        self.factors.as_ref()
    }

    /// Radius used by the most recent selection (0 for ACF).
    pub fn last_beta(&self) -> f64 {
        self.last_beta
    }

    fn beta(&self) -> Result<f64> {
        let t = self.history.round;
        let (n, m) = (self.world.n_users, self.world.n_items);
        Ok(match self.params.radius {
            RadiusRule::Practical => practical_beta(self.params.kappa, self.world.eta, n, m, t),
            RadiusRule::Theoretical => {
                self.params.kappa * self.params.kappa * beta_star(&self.hp, t, n, m)?
            }
        })
    }
}

impl Policy for LowRank {
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
        profile.check_shape(self.world.n_users, self.world.n_items)?;
        let init = match &self.factors {
            Some(f) => FactorInit::Warm(f),
            None => FactorInit::Seed(self.seed),
        };
        let fit = als_least_squares(
            &self.history.log,
            &self.hp,
            Some(&self.prior),
            init,
            &self.params.als,
        )?;
        let method = self.world.allocation_method(&self.params);
        let x = if self.params.kind == PolicyKind::Acf {
            self.last_beta = 0.0;
            method.allocate(&fit.estimate, profile)?
        } else {
            self.last_beta = self.beta()?;
            let spec = ConfidenceSpec::new(
                fit.estimate,
                self.history.log.counts().to_vec(),
                self.params.gamma,
                self.last_beta,
            )?;
            let options = OptimismOptions {
                mode: self.params.mode,
                method,
                ..OptimismOptions::default()
            };
            optimistic_allocation(&spec, profile, &options, Some(&fit.factors))?.allocation
        };
        self.factors = Some(fit.factors);
        self.history.requested(&x);
        Ok(x)
    }

    fn update(&mut self, feedback: &RoundFeedback) -> Result<()> {
        self.history.record(feedback, false)
    }
}
