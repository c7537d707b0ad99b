//! Optimistic allocation: jointly maximize `<X, Theta>` over feasible `X` and
//! `Theta` in the confidence ellipsoid.
//!
//! Both modes alternate between the two arguments, so the joint objective
//! never decreases across iterations.
//!
//! * `Fast`: for a fixed `X` the ellipsoid maximizer is
//!   `Theta = center + sqrt(beta) * W` with
//!   `w_ui = x_ui / ((n_ui + gamma) ||X||_{E^-1})`. Runs are started both from
//!   the plug-in allocation and from the all-ones matrix; the better fixed
//!   point wins.
//! * `Alternating`: keeps `Theta = P Q^T` in factored form. For fixed `Q` the
//!   ellipsoid constraint is a block-diagonal quadratic in `P`, so the
//!   `P`-update is an exact linear maximization over an ellipsoid (likewise
//!   for `Q`). Starts from `X = 1` and the least-squares factors.

use crate::alloc::AllocationMethod;
use crate::error::{Error, Result};
use crate::linalg::{dot, solve_with, SpdSystem};
use crate::model::{allocation_value, AllocationMatrix, ConstraintProfile, MeanRewardMatrix};

use super::als::FactorPair;
use super::confidence::ConfidenceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimismMode {
    Alternating,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimismOptions {
    pub mode: OptimismMode,
    pub method: AllocationMethod,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Inner factor sweeps per outer iteration (alternating mode).
    pub inner_sweeps: usize,
}

impl Default for OptimismOptions {
    fn default() -> Self {
        Self {
            mode: OptimismMode::Fast,
            method: AllocationMethod::Exact,
            max_iters: 50,
            rel_tol: 1e-6,
            inner_sweeps: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimisticChoice {
    pub allocation: AllocationMatrix,
    pub theta_tilde: MeanRewardMatrix,
    /// `<allocation, theta_tilde>`.
    pub value: f64,
    pub iterations: usize,
}

/// Picks `X` and an optimistic `Theta` from the ellipsoid in `spec`.
///
/// `factors` are the least-squares factors behind `spec.center`; alternating
/// mode requires them. The result never scores below the plug-in allocation
/// `solve(center)` evaluated at the center.
pub fn optimistic_allocation(
    spec: &ConfidenceSpec,
    profile: &ConstraintProfile,
    options: &OptimismOptions,
    factors: Option<&FactorPair>,
) -> Result<OptimisticChoice> {
    let (n, m) = spec.center.shape();
    profile.check_shape(n, m)?;
    let plug_in = options.method.allocate(&spec.center, profile)?;
    let plug_in_value = allocation_value(&plug_in, &spec.center)?;
    let fallback = || OptimisticChoice {
        allocation: plug_in.clone(),
        theta_tilde: spec.center.clone(),
        value: plug_in_value,
        iterations: 0,
    };
    if spec.beta == 0.0 {
        return Ok(fallback());
    }

    match options.mode {
        OptimismMode::Fast => {
            let from_plug_in = fast_fixed_point(spec, profile, options, plug_in.clone())?;
            let ones = AllocationMatrix::ones(n, m);
            let first = options.method.allocate(&closed_form(spec, &ones), profile)?;
            let from_ones = fast_fixed_point(spec, profile, options, first)?;
            Ok(if from_ones.value > from_plug_in.value + 1e-12 {
                from_ones
            } else {
                from_plug_in
            })
        }
        OptimismMode::Alternating => {
            let factors = factors.ok_or_else(|| {
                Error::invalid("alternating optimism needs the least-squares factors")
            })?;
            if factors.n_users() != n || factors.n_items() != m {
                return Err(Error::dims("factors do not match the confidence center"));
            }
            let choice = alternating(spec, profile, options, factors)?;
            let inside = spec.distance_sq(&choice.theta_tilde)? <= spec.beta * (1.0 + 1e-9) + 1e-12;
            if inside && choice.value >= plug_in_value {
                Ok(choice)
            } else {
                Ok(fallback())
            }
        }
    }
}

/// Ellipsoid maximizer of `<X, Theta>` for a fixed `X`.
pub fn closed_form(spec: &ConfidenceSpec, x: &AllocationMatrix) -> MeanRewardMatrix {
    let mut theta = spec.center.clone();
    let inv_norm_sq: f64 = x
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(k, _)| 1.0 / spec.weight(k))
        .sum();
    if inv_norm_sq == 0.0 {
        return theta;
    }
    let scale = spec.beta.sqrt() / inv_norm_sq.sqrt();
    for (k, (&on, v)) in x.entries().iter().zip(theta.as_mut_slice()).enumerate() {
        if on {
            *v += scale / spec.weight(k);
        }
    }
    theta
}

fn fast_fixed_point(
    spec: &ConfidenceSpec,
    profile: &ConstraintProfile,
    options: &OptimismOptions,
    mut x: AllocationMatrix,
) -> Result<OptimisticChoice> {
    let mut iterations = 0;
    while iterations < options.max_iters {
        iterations += 1;
        let theta = closed_form(spec, &x);
        let next = options.method.allocate(&theta, profile)?;
        if next == x {
            break;
        }
        x = next;
    }
    let theta_tilde = closed_form(spec, &x);
    let value = allocation_value(&x, &theta_tilde)?;
    Ok(OptimisticChoice {
        allocation: x,
        theta_tilde,
        value,
        iterations,
    })
}

/// One side of the factored problem, laid out so that the variable factor
/// indexes rows.
struct Oriented {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    center: Vec<f64>,
}

impl Oriented {
    fn users(spec: &ConfidenceSpec) -> Self {
        let (n, m) = spec.center.shape();
        Self {
            rows: n,
            cols: m,
            weights: (0..n * m).map(|k| spec.weight(k)).collect(),
            center: spec.center.as_slice().to_vec(),
        }
    }

    fn items(spec: &ConfidenceSpec) -> Self {
        let (n, m) = spec.center.shape();
        let mut weights = Vec::with_capacity(n * m);
        let mut center = Vec::with_capacity(n * m);
        for i in 0..m {
            for u in 0..n {
                weights.push(spec.weight(u * m + i));
                center.push(spec.center.get(u, i));
            }
        }
        Self {
            rows: m,
            cols: n,
            weights,
            center,
        }
    }

    /// `argmax_V <X, V F^T>` s.t. `||V F^T - C||_E^2 <= beta`, written into `var`.
    /// `x` is laid out like `weights`. Returns whether the constraint was satisfiable.
    fn argmax(&self, x: &[bool], fixed: &[f64], rank: usize, beta: f64, var: &mut [f64]) -> bool {
        let mut sys = SpdSystem::new(rank);
        let mut centers = Vec::with_capacity(self.rows * rank);
        let mut directions = Vec::with_capacity(self.rows * rank);
        let mut residual = 0.0;
        let mut spread = 0.0;
        for r in 0..self.rows {
            sys.reset();
            let mut gain = vec![0.0; rank];
            let mut base = 0.0;
            for c in 0..self.cols {
                let k = r * self.cols + c;
                let f = &fixed[c * rank..(c + 1) * rank];
                let w = self.weights[k];
                let target = self.center[k];
                sys.accumulate(f, w, w * target);
                base += w * target * target;
                if x[k] {
                    for (g, fj) in gain.iter_mut().zip(f) {
                        *g += fj;
                    }
                }
            }
            let chol = sys.cholesky();
            let mid = solve_with(&chol, &sys.b);
            let dir = solve_with(&chol, &gain);
            residual += base - dot(&sys.b, &mid);
            spread += dot(&gain, &dir);
            centers.extend(mid);
            directions.extend(dir);
        }
        let slack = beta - residual;
        let feasible = slack >= -1e-9 * beta.max(1.0);
        let tau = if feasible && spread > 0.0 {
            (slack.max(0.0) / spread).sqrt()
        } else {
            0.0
        };
        for ((v, c), d) in var.iter_mut().zip(&centers).zip(&directions) {
            *v = c + tau * d;
        }
        feasible
    }
}

fn transpose_bits(x: &AllocationMatrix) -> Vec<bool> {
    let (n, m) = x.shape();
    let mut out = Vec::with_capacity(n * m);
    for i in 0..m {
        for u in 0..n {
            out.push(x.get(u, i));
        }
    }
    out
}

fn alternating(
    spec: &ConfidenceSpec,
    profile: &ConstraintProfile,
    options: &OptimismOptions,
    factors: &FactorPair,
) -> Result<OptimisticChoice> {
    let (n, m) = spec.center.shape();
    let rank = factors.rank();
    let by_user = Oriented::users(spec);
    let by_item = Oriented::items(spec);
    let mut f = factors.clone();
    let mut x = AllocationMatrix::ones(n, m);
    let mut prev = f64::NEG_INFINITY;
    let mut iterations = 0;

    while iterations < options.max_iters {
        iterations += 1;
        let x_users = x.entries().to_vec();
        let x_items = transpose_bits(&x);
        let mut inner_prev = f64::NEG_INFINITY;
        for _ in 0..options.inner_sweeps {
            let items = f.items().to_vec();
            by_user.argmax(&x_users, &items, rank, spec.beta, f.users_mut());
            let users = f.users().to_vec();
            by_item.argmax(&x_items, &users, rank, spec.beta, f.items_mut());
            let obj = allocation_value(&x, &f.product())?;
            if (obj - inner_prev).abs() <= options.rel_tol * obj.abs().max(1e-12) {
                break;
            }
            inner_prev = obj;
        }
        let theta = f.product();
        let next = options.method.allocate(&theta, profile)?;
        let obj = allocation_value(&next, &theta)?;
        let settled = next == x || (obj - prev).abs() <= options.rel_tol * prev.abs().max(1e-12);
        x = next;
        prev = obj;
        if settled {
            break;
        }
    }
    let theta_tilde = f.product();
    let value = allocation_value(&x, &theta_tilde)?;
    Ok(OptimisticChoice {
        allocation: x,
        theta_tilde,
        value,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alloc::solve_exact;
    use crate::estimation::confidence::empirical_norm_sq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spec(rng: &mut ChaCha8Rng, n: usize, m: usize, beta: f64) -> ConfidenceSpec {
        let center = MeanRewardMatrix::from_fn(n, m, |_, _| rng.random_range(0.0..10.0));
        let counts = (0..n * m).map(|_| rng.random_range(0..6)).collect();
        ConfidenceSpec::new(center, counts, 1.0, beta).unwrap()
    }

    fn profile(n: usize, m: usize) -> ConstraintProfile {
        ConstraintProfile::new(vec![2; m], vec![1; n])
    }

    #[test]
    fn closed_form_hits_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = random_spec(&mut rng, 4, 3, 2.5);
        let x = AllocationMatrix::from_arms(4, 3, &[(0, 0), (1, 2), (3, 1)]).unwrap();
        let theta = closed_form(&spec, &x);
        let d = empirical_norm_sq(&theta.sub(&spec.center).unwrap(), &spec.counts, spec.gamma).unwrap();
        assert!((d - 2.5).abs() < 1e-9);
        // No feasible point in the ellipsoid scores higher on this X.
        for _ in 0..200 {
            let probe = MeanRewardMatrix::from_fn(4, 3, |u, i| spec.center.get(u, i) + rng.random_range(-1.0..1.0));
            let probe = super::super::confidence::project_to_confidence(&probe, &spec).unwrap();
            assert!(
                allocation_value(&x, &probe).unwrap() <= allocation_value(&x, &theta).unwrap() + 1e-9
            );
        }
    }

    #[test]
    fn zero_radius_is_plug_in() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = random_spec(&mut rng, 5, 3, 0.0);
        let p = profile(5, 3);
        for mode in [OptimismMode::Fast, OptimismMode::Alternating] {
            let f = FactorPair::random(5, 3, 2, 10.0, &mut rng);
            let opts = OptimismOptions { mode, ..Default::default() };
            let c = optimistic_allocation(&spec, &p, &opts, Some(&f)).unwrap();
            assert_eq!(c.theta_tilde, spec.center);
            assert_eq!(c.allocation, solve_exact(&spec.center, &p).unwrap().0);
        }
    }

    #[test]
    fn never_below_plug_in() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..30 {
            let beta = rng.random_range(0.1..30.0);
            let spec = random_spec(&mut rng, 6, 4, beta);
            let p = profile(6, 4);
            let (_, greedy) = solve_exact(&spec.center, &p).unwrap();
            let f = FactorPair::random(6, 4, 2, 10.0, &mut rng);
            for mode in [OptimismMode::Fast, OptimismMode::Alternating] {
                let opts = OptimismOptions { mode, ..Default::default() };
                let c = optimistic_allocation(&spec, &p, &opts, Some(&f)).unwrap();
                assert!(c.value >= greedy - 1e-9, "trial {trial} {mode:?}");
                assert!(spec.distance_sq(&c.theta_tilde).unwrap() <= beta * (1.0 + 1e-9) + 1e-12);
            }
        }
    }

    #[test]
    fn alternating_requires_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = random_spec(&mut rng, 3, 3, 1.0);
        let opts = OptimismOptions {
            mode: OptimismMode::Alternating,
            ..Default::default()
        };
        assert!(optimistic_allocation(&spec, &profile(3, 3), &opts, None).is_err());
    }

    #[test]
    fn factor_block_step_stays_inside() {
        // A low-rank center with factors that reproduce it exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = FactorPair::random(6, 4, 2, 10.0, &mut rng);
        let center = f.product();
        let counts: Vec<u32> = (0..24).map(|_| rng.random_range(0..5)).collect();
        let spec = ConfidenceSpec::new(center, counts, 1.0, 4.0).unwrap();
        let opts = OptimismOptions {
            mode: OptimismMode::Alternating,
            ..Default::default()
        };
        let c = optimistic_allocation(&spec, &profile(6, 4), &opts, Some(&f)).unwrap();
        assert!(spec.distance_sq(&c.theta_tilde).unwrap() <= 4.0 * (1.0 + 1e-9));
        let (_, greedy) = solve_exact(&spec.center, &profile(6, 4)).unwrap();
        assert!(c.value > greedy, "optimism should add value when beta > 0");
    }
}
