//! Interactive allocation policies behind one select/update interface.
//!
//! | kind    | estimate                        | allocation                         |
//! |---------|---------------------------------|------------------------------------|
//! | LR-COMB | low-rank least squares          | optimistic, capacity-aware         |
//! | ACF     | low-rank least squares          | plug-in, capacity-aware            |
//! | CUCB    | independent per-arm means + UCB | capacity-aware                     |
//! | ICF     | per-user linear UCB on item factors | top-`d_u` per user, capacities ignored |
//! | ICF2    | as ICF, dropped pairs logged as zero reward | as ICF                 |

mod cucb;
mod icf;
mod lowrank;

pub use cucb::{cucb_index, Cucb};
pub use icf::Icf;
pub use lowrank::LowRank;

use crate::alloc::{AllocationMethod, DualConfig};
use crate::error::{Error, Result};
use crate::estimation::{AlsOptions, OptimismMode};
use crate::model::{
    AllocationMatrix, Arm, ConstraintProfile, Hyperparams, MeanRewardMatrix, ObservationLog,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    LrComb,
    Acf,
    Cucb,
    Icf,
    Icf2,
}

impl PolicyKind {
    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::LrComb => "LR-COMB",
            PolicyKind::Acf => "ACF",
            PolicyKind::Cucb => "CUCB",
            PolicyKind::Icf => "ICF",
            PolicyKind::Icf2 => "ICF2",
        }
    }

    /// Whether requests always satisfy the capacities.
    pub fn respects_capacity(self) -> bool {
        !matches!(self, PolicyKind::Icf | PolicyKind::Icf2)
    }
}

/// Which confidence radius LR-COMB uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusRule {
    /// `kappa^2 eta^2 ln(N M t)`.
    Practical,
    /// The covering-number radius, scaled by `kappa^2`.
    Theoretical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Allocator {
    Exact,
    Dual,
}

/// Everything needed to build a policy for one world.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub kind: PolicyKind,
    pub name: String,
    pub rank: usize,
    pub gamma: f64,
    pub kappa: f64,
    pub mode: OptimismMode,
    pub radius: RadiusRule,
    pub allocator: Allocator,
    /// Constant value of the initial estimate `Theta_bar`; `None` means `B / 2`.
    pub prior_mean: Option<f64>,
    pub delta: f64,
    pub alpha_cover: f64,
    /// Multiplier on `B` in the CUCB bonus.
    pub cucb_scale: f64,
    /// CUCB indices are clipped to `[0, B + bonus_cap]`; `None` means `B`.
    pub bonus_cap: Option<f64>,
    pub refit_every: usize,
    pub icf_ridge: f64,
    pub kappa_icf: f64,
    pub als: AlsOptions,
}

impl PolicyParams {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            name: kind.label().to_string(),
            rank: 3,
            gamma: 1.0,
            kappa: 1.0,
            mode: OptimismMode::Fast,
            radius: RadiusRule::Practical,
            allocator: Allocator::Exact,
            prior_mean: None,
            delta: 0.1,
            alpha_cover: 0.01,
            cucb_scale: 1.0,
            bonus_cap: None,
            refit_every: 5,
            icf_ridge: 1.0,
            kappa_icf: 1.0,
            als: AlsOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rank >= 1
            && self.gamma > 0.0
            && self.kappa >= 0.0
            && self.delta > 0.0
            && self.delta < 1.0
            && self.alpha_cover > 0.0
            && self.cucb_scale >= 0.0
            && self.bonus_cap.is_none_or(|c| c >= 0.0)
            && self.refit_every >= 1
            && self.icf_ridge > 0.0
            && self.kappa_icf >= 0.0
            && self.als.max_sweeps >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid parameters for policy {}", self.name)))
        }
    }
}

/// Dimensions and noise model of the world a policy acts in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldInfo {
    pub n_users: usize,
    pub n_items: usize,
    pub bound: f64,
    pub eta: f64,
}

impl WorldInfo {
    fn prior_mean(&self, p: &PolicyParams) -> f64 {
        p.prior_mean.unwrap_or(self.bound / 2.0)
    }

    fn prior(&self, p: &PolicyParams) -> MeanRewardMatrix {
        MeanRewardMatrix::filled(self.n_users, self.n_items, self.prior_mean(p))
    }

    fn hyperparams(&self, p: &PolicyParams) -> Hyperparams {
        let prior = self.prior_mean(p);
        Hyperparams {
            eta: self.eta,
            bound: self.bound,
            // Distance of the constant prior from the box is at most this.
            init_radius: prior.abs().max((self.bound - prior).abs())
                * ((self.n_users * self.n_items) as f64).sqrt(),
            gamma: p.gamma,
            delta: p.delta,
            alpha_cover: p.alpha_cover,
            rank: p.rank,
        }
    }

    fn allocation_method(&self, p: &PolicyParams) -> AllocationMethod {
        match p.allocator {
            Allocator::Exact => AllocationMethod::Exact,
            Allocator::Dual => AllocationMethod::Dual(DualConfig::for_bound(self.bound)),
        }
    }
}

/// What the environment reports back after a round.
#[derive(Debug, Clone)]
pub struct RoundFeedback {
    /// Pairs actually served.
    pub realized: AllocationMatrix,
    /// Observed reward for every served pair.
    pub rewards: Vec<(usize, usize, f64)>,
    /// Requested pairs that were not served because of capacity.
    pub dropped: Vec<Arm>,
}

impl RoundFeedback {
    pub fn empty(n_users: usize, n_items: usize) -> Self {
        Self {
            realized: AllocationMatrix::zeros(n_users, n_items),
            rewards: Vec::new(),
            dropped: Vec::new(),
        }
    }
}

pub trait Policy: Send {
    fn name(&self) -> &str;

    fn kind(&self) -> PolicyKind;

    /// Current round `t` (1 before the first update).
    fn round(&self) -> u64;

    fn log(&self) -> &ObservationLog;

    /// Requested allocation for this round.
    fn select(&mut self, profile: &ConstraintProfile) -> Result<AllocationMatrix>;

    /// Consumes the round's feedback; every reported pair must have been requested.
    fn update(&mut self, feedback: &RoundFeedback) -> Result<()>;
}

/// Builds a policy; `seed` drives its factor initialization.
pub fn build_policy(params: &PolicyParams, world: WorldInfo, seed: u64) -> Result<Box<dyn Policy>> {
    params.validate()?;
    if params.rank > world.n_users.min(world.n_items) {
        return Err(Error::invalid(format!(
            "policy {} rank {} exceeds min(N, M) = {}",
            params.name,
            params.rank,
            world.n_users.min(world.n_items)
        )));
    }
    Ok(match params.kind {
        PolicyKind::LrComb | PolicyKind::Acf => Box::new(LowRank::new(params.clone(), world, seed)?),
        PolicyKind::Cucb => Box::new(Cucb::new(params.clone(), world)),
        PolicyKind::Icf | PolicyKind::Icf2 => Box::new(Icf::new(params.clone(), world, seed)),
    })
}

/// Log and round bookkeeping shared by every policy.
#[derive(Debug, Clone)]
pub(crate) struct History {
    pub log: ObservationLog,
    pub round: u64,
    pending: Option<AllocationMatrix>,
}

impl History {
    pub fn new(n_users: usize, n_items: usize) -> Self {
        Self {
            log: ObservationLog::new(n_users, n_items),
            round: 1,
            pending: None,
        }
    }

    pub fn requested(&mut self, x: &AllocationMatrix) {
        self.pending = Some(x.clone());
    }

    /// Validates the feedback against the pending request, logs rewards
    /// (and zeros for dropped pairs when `zero_on_drop`), and advances `t`.
    pub fn record(&mut self, feedback: &RoundFeedback, zero_on_drop: bool) -> Result<()> {
        let shape = (self.log.n_users(), self.log.n_items());
        if feedback.realized.shape() != shape {
            return Err(Error::dims("feedback allocation shape"));
        }
        let requested = self.pending.take();
        let was_requested = |u: usize, i: usize| requested.as_ref().is_some_and(|x| x.get(u, i));
        for (u, i) in feedback.realized.arms() {
            if !was_requested(u, i) {
                return Err(Error::Policy(format!("served pair ({u}, {i}) was not requested")));
            }
        }
        for &(u, i, _) in &feedback.rewards {
            if u >= shape.0 || i >= shape.1 || !feedback.realized.get(u, i) {
                return Err(Error::Policy(format!("reward for unserved pair ({u}, {i})")));
            }
        }
        for &(u, i) in &feedback.dropped {
            if u >= shape.0 || i >= shape.1 || !was_requested(u, i) {
                return Err(Error::Policy(format!("dropped pair ({u}, {i}) was not requested")));
            }
            if feedback.realized.get(u, i) {
                return Err(Error::Policy(format!("pair ({u}, {i}) both served and dropped")));
            }
        }
        for &(u, i, r) in &feedback.rewards {
            self.log.push(self.round, u, i, r)?;
        }
        if zero_on_drop {
            for &(u, i) in &feedback.dropped {
                self.log.push(self.round, u, i, 0.0)?;
            }
        }
        self.round += 1;
        Ok(())
    }
}
