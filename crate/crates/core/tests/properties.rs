//! Invariants over random inputs.

use gbm_integrals::oracles::{gamma_p, gamma_q, ks_statistic};
use gbm_integrals::paths::{BrownianIncrements, PathConfig, Scheme};
use gbm_integrals::pricing::{canonicalize, OptionSpec};
use gbm_integrals::McConfig;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn refinement_keeps_coarse_points(seed in any::<u64>(), index in 0u64..1000, steps in 1usize..64) {
        let coarse = BrownianIncrements::generate(seed, index, steps, 1.0 / steps as f64);
        let fine = coarse.refine();
        let (c, f) = (coarse.grid_values(), fine.grid_values());
        for (k, &b) in c.iter().enumerate() {
            prop_assert!((f[2 * k] - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn gamma_halves_sum_to_one(a in 0.05f64..20.0, x in 0.0f64..60.0) {
        let p = gamma_p(a, x);
        let q = gamma_q(a, x);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + q - 1.0).abs() < 1e-12);
        prop_assert!(gamma_p(a, x + 0.5) >= p);
    }

    #[test]
    fn ks_statistic_lies_in_unit_interval(xs in proptest::collection::vec(-5.0f64..5.0, 1..200)) {
        let d = ks_statistic(&xs, |x| 1.0 / (1.0 + (-x).exp()));
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 0.5 / xs.len() as f64 - 1e-12);
    }

    #[test]
    fn canonicalization_is_idempotent(a in 0.01f64..10.0, t in 0.01f64..10.0, nu in -2.0f64..2.0, s in 0.1f64..4.0) {
        let c = canonicalize(&OptionSpec::new(a, t, nu, s).unwrap());
        prop_assert_eq!(canonicalize(&c.spec).spec, c.spec);
        prop_assert!((c.spec.horizon / (s * s) - t).abs() <= 1e-12 * t);
        prop_assert!((c.scale * s * s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn noiseless_trapezoid_error_shrinks_with_steps(nu in -1.0f64..1.0, k in 3u32..7) {
        let steps = 1usize << k;
        let exact = |c: f64| if c.abs() < 1e-12 { 1.0 } else { (c.exp() - 1.0) / c };
        let err = |steps: usize| {
            let config = PathConfig::new(1.0, steps, nu, 0).unwrap().with_scheme(Scheme::Trapezoid);
            let incs = BrownianIncrements::zeros(steps, config.dt());
            let p = gbm_integrals::PathSample::from_increments(&config, &incs, None).unwrap();
            (p.integral - exact(nu - 0.5)).abs()
        };
        let (coarse, fine) = (err(steps), err(2 * steps));
        prop_assert!(fine <= coarse / 3.5 + 1e-15);
    }

    #[test]
    fn empirical_cdf_is_monotone(seed in any::<u64>(), a in 0.05f64..5.0, da in 0.0f64..2.0) {
        let s = McConfig::default().with_seed(seed).with_steps(16).sample(1.0, 400, &[0.0]).unwrap();
        prop_assert!(s.cdf_direct(a, 0.0).unwrap().mean <= s.cdf_direct(a + da, 0.0).unwrap().mean);
    }
}
