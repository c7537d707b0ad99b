//! Low-rank reward estimation and optimistic selection.

mod als;
mod confidence;
mod optimism;
mod radius;

pub use als::{
    als_least_squares, als_objective, als_user_gradient, AlsFit, AlsOptions, FactorInit,
    FactorPair,
};
pub use confidence::{empirical_norm_sq, project_to_confidence, ConfidenceSpec};
pub use optimism::{
    closed_form, optimistic_allocation, OptimismMode, OptimismOptions, OptimisticChoice,
};
pub use radius::{beta_star, covering_log_bound, practical_beta};
