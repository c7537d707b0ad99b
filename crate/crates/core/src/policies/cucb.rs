//! Combinatorial UCB over independent user-item arms.

use crate::alloc::solve_exact;
use crate::error::Result;
use crate::model::{AllocationMatrix, ConstraintProfile, MeanRewardMatrix, ObservationLog};

use super::{History, Policy, PolicyKind, PolicyParams, RoundFeedback, WorldInfo};

/// `mean + bound * sqrt(1.5 ln t / count)`, or `+inf` for an unplayed arm.
///
/// `t` is the round as a real number, at least 1.
pub fn cucb_index(mean: f64, count: u32, t: f64, bound: f64) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    let log_t = t.max(1.0).ln();
    mean + bound * (1.5 * log_t / f64::from(count)).sqrt()
}

pub struct Cucb {
    params: PolicyParams,
    world: WorldInfo,
    history: History,
}

impl Cucb {
    pub fn new(params: PolicyParams, world: WorldInfo) -> Self {
        Self {
            history: History::new(world.n_users, world.n_items),
            params,
            world,
        }
    }

    /// Clipped index matrix for the current round.
    pub fn indices(&self) -> MeanRewardMatrix {
        let (n, m) = (self.world.n_users, self.world.n_items);
        let log = &self.history.log;
        let scale = self.params.cucb_scale * self.world.bound;
        let hi = self.world.bound + self.params.bonus_cap.unwrap_or(self.world.bound);
        MeanRewardMatrix::from_fn(n, m, |u, i| {
            let mean = log.mean(u, i).unwrap_or(0.0);
            cucb_index(mean, log.count(u, i), self.history.round as f64, scale).clamp(0.0, hi)
        })
    }
}

impl Policy for Cucb {
    fn name(&self) -> &str {
        &self.params.name
    }

    fn kind(&self) -> PolicyKind {
        PolicyKind::Cucb
    }

    fn round(&self) -> u64 {
        self.history.round
    }

    fn log(&self) -> &ObservationLog {
        &self.history.log
    }

    fn select(&mut self, profile: &ConstraintProfile) -> Result<AllocationMatrix> {
        profile.check_shape(self.world.n_users, self.world.n_items)?;
        let (x, _) = solve_exact(&self.indices(), profile)?;
        self.history.requested(&x);
        Ok(x)
    }

    fn update(&mut self, feedback: &RoundFeedback) -> Result<()> {
        self.history.record(feedback, false)
    }
}
