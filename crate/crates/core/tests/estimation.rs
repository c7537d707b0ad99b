use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lrcomb::alloc::{solve_exact, user_best_response, PriceVector};
use lrcomb::estimation::{als_objective, als_user_gradient, FactorPair};
use lrcomb::model::{allocation_value, validate_allocation, ConstraintProfile, MeanRewardMatrix, ObservationLog};

#[test]
fn user_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut log = ObservationLog::new(4, 3);
    for t in 1..=20u64 {
        log.push(t, rng.random_range(0..4), rng.random_range(0..3), rng.random_range(0.0..5.0))
            .unwrap();
    }
    let prior = MeanRewardMatrix::filled(4, 3, 2.5);
    let factors = FactorPair::random(4, 3, 2, 5.0, &mut rng);
    let grad = als_user_gradient(&log, &factors, 0.7, Some(&prior)).unwrap();
    let h = 1e-5;
    for k in 0..grad.len() {
        let mut up = factors.clone();
        up.users_mut()[k] += h;
        let mut down = factors.clone();
        down.users_mut()[k] -= h;
        let numeric = (als_objective(&log, &up, 0.7, Some(&prior)).unwrap()
            - als_objective(&log, &down, 0.7, Some(&prior)).unwrap())
            / (2.0 * h);
        let scale = grad[k].abs().max(1.0);
        assert!((numeric - grad[k]).abs() <= 1e-4 * scale, "entry {k}: {numeric} vs {}", grad[k]);
    }
}

fn instance() -> impl Strategy<Value = (MeanRewardMatrix, ConstraintProfile)> {
    (1usize..7, 1usize..6).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-2.0f64..10.0, n * m),
            prop::collection::vec(0u32..4, m),
            prop::collection::vec(0u32..4, n),
        )
            .prop_map(move |(v, c, d)| {
                (MeanRewardMatrix::new(n, m, v).unwrap(), ConstraintProfile::new(c, d))
            })
    })
}

proptest! {
    #[test]
    fn exact_allocation_is_feasible_and_beats_best_responses((theta, profile) in instance()) {
        let (x, value) = solve_exact(&theta, &profile).unwrap();
        prop_assert!(validate_allocation(&x, &profile).unwrap().feasible);
        prop_assert!((allocation_value(&x, &theta).unwrap() - value).abs() < 1e-9);
        // With capacities relaxed, zero prices give an upper bound.
        let zero = PriceVector::zeros(theta.n_items());
        let relaxed: f64 = (0..theta.n_users())
            .map(|u| {
                let pick = user_best_response(theta.row(u), &zero, profile.demands[u]).unwrap();
                pick.iter().zip(theta.row(u)).filter(|(p, _)| **p).map(|(_, v)| v).sum::<f64>()
            })
            .sum();
        prop_assert!(value <= relaxed + 1e-9);
        prop_assert!(value >= 0.0);
    }

    #[test]
    fn more_capacity_never_lowers_the_optimum((theta, profile) in instance(), bump in 0usize..6) {
        let base = solve_exact(&theta, &profile).unwrap().1;
        let mut caps = profile.capacities.clone();
        let k = bump % caps.len();
        caps[k] += 1;
        let wider = solve_exact(&theta, &ConstraintProfile::new(caps, profile.demands.clone())).unwrap().1;
        prop_assert!(wider >= base - 1e-9);
    }
}
