//! Count-weighted empirical norm and the confidence ellipsoid built on it.

use crate::error::{Error, Result};
use crate::model::MeanRewardMatrix;

/// `sum_{u,i} (n_{u,i} + gamma) * delta_{u,i}^2`.
pub fn empirical_norm_sq(delta: &MeanRewardMatrix, counts: &[u32], gamma: f64) -> Result<f64> {
    if counts.len() != delta.as_slice().len() {
        return Err(Error::dims(format!(
            "{} counts for a {:?} matrix",
            counts.len(),
            delta.shape()
        )));
    }
    if gamma < 0.0 {
        return Err(Error::invalid("gamma must be nonnegative"));
    }
    Ok(delta
        .as_slice()
        .iter()
        .zip(counts)
        .map(|(d, &n)| (f64::from(n) + gamma) * d * d)
        .sum())
}

/// Ellipsoid `{ Theta : ||Theta - center||_{2,E} <= sqrt(beta) }`.
#[derive(Debug, Clone)]
pub struct ConfidenceSpec {
    pub center: MeanRewardMatrix,
    pub counts: Vec<u32>,
    pub gamma: f64,
    /// Squared radius.
    pub beta: f64,
}

impl ConfidenceSpec {
    pub fn new(center: MeanRewardMatrix, counts: Vec<u32>, gamma: f64, beta: f64) -> Result<Self> {
        if counts.len() != center.as_slice().len() {
            return Err(Error::dims("counts do not match the center matrix"));
        }
        if !(gamma > 0.0) {
            return Err(Error::invalid(format!("gamma {gamma} must be positive")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta {beta} must be finite and nonnegative")));
        }
        Ok(Self {
            center,
            counts,
            gamma,
            beta,
        })
    }

    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        f64::from(self.counts[k]) + self.gamma
    }

    /// Squared empirical distance from the center.
    pub fn distance_sq(&self, theta: &MeanRewardMatrix) -> Result<f64> {
        empirical_norm_sq(&theta.sub(&self.center)?, &self.counts, self.gamma)
    }

    pub fn contains(&self, theta: &MeanRewardMatrix) -> Result<bool> {
        Ok(self.distance_sq(theta)? <= self.beta)
    }
}

/// Radial projection onto the ellipsoid: points inside are returned as-is,
/// points outside are pulled toward the center onto the boundary.
pub fn project_to_confidence(
    theta: &MeanRewardMatrix,
    spec: &ConfidenceSpec,
) -> Result<MeanRewardMatrix> {
    let dist_sq = spec.distance_sq(theta)?;
    if dist_sq <= spec.beta {
        return Ok(theta.clone());
    }
    let s = (spec.beta / dist_sq).sqrt();
    spec.center.lin_comb(1.0 - s, theta, s)
}
