//! Low-rank combinatorial bandits for capacity-constrained allocation.
//!
//! A provider repeatedly assigns items with limited capacity to users with
//! limited demand, learning the unknown user-item reward matrix from
//! semi-bandit feedback. The estimator exploits a low-rank reward structure and
//! picks allocations optimistically inside a count-weighted confidence set.

pub mod alloc;
pub mod data;
pub mod environment;
pub mod error;
pub mod estimation;
pub mod experiment;
mod linalg;
pub mod model;
pub mod policies;

pub use error::{Error, Result};
