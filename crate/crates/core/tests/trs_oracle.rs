//! Trust-region subproblem solvers against a brute-force grid minimum.

mod common;

use common::{grid_min, kkt_residual, model, random_instance, random_least_squares, Kind};
use kansa_core::trust_region::steps::{cauchy_step, dogleg_step, nearly_exact_step, twod_subspace_step};
use proptest::prelude::*;

const TOL: f64 = 1e-6;

fn kind(k: u8) -> Kind {
    match k % 3 {
        0 => Kind::PositiveDefinite,
        1 => Kind::Indefinite,
        _ => Kind::HardCase,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn nearly_exact_attains_grid_minimum(seed in any::<u64>(), k in 0u8..3) {
        let (h, g, delta) = random_instance(kind(k), seed);
        let best = grid_min(&h, &g, delta);
        let s = nearly_exact_step(&h, &g, delta);
        let m = model(&h, &g, &s.gamma);
        prop_assert!(s.gamma.norm() <= delta * (1.0 + 1e-10));
        prop_assert!((m - best).abs() <= TOL, "model {m} grid {best}");
        let lambda = s.lambda.unwrap_or(0.0);
        prop_assert!(kkt_residual(&h, &g, delta, &s.gamma, lambda) <= 1e-8);
    }

    #[test]
    fn approximate_steps_never_beat_the_grid(seed in any::<u64>(), k in 0u8..3) {
        let (h, g, delta) = random_instance(kind(k), seed);
        let best = grid_min(&h, &g, delta);
        let two = twod_subspace_step(&h, &g, delta, 1e-14);
        let cauchy = cauchy_step(&g, &h, delta);
        for x in [&two.gamma, &cauchy] {
            prop_assert!(x.norm() <= delta * (1.0 + 1e-10));
            prop_assert!(model(&h, &g, x) >= best - TOL);
        }
        prop_assert!(model(&h, &g, &two.gamma) <= model(&h, &g, &cauchy) + 1e-12);
        prop_assert!(model(&h, &g, &cauchy) <= 0.0);
    }

    #[test]
    fn dogleg_is_feasible_and_no_better_than_optimal(seed in any::<u64>()) {
        let (j, g, delta) = random_least_squares(seed);
        let a = j.tr_mul(&j);
        let best = grid_min(&a, &g, delta);
        let s = dogleg_step(&j, &g, delta);
        let m = model(&a, &g, &s.gamma);
        prop_assert!(s.gamma.norm() <= delta * (1.0 + 1e-10));
        prop_assert!(m >= best - TOL);
        // At least the Cauchy decrease.
        prop_assert!(m <= model(&a, &g, &cauchy_step(&g, &a, delta)) + 1e-12);
    }
}
