//! Pricing invariants and the volatility time change.

use gbm_integrals::pricing::{self, canonicalize, OptionSpec};
use gbm_integrals::stats::z_score;
use gbm_integrals::{EstimateWithCI, McConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Direct simulation of `∫₀ᵗ exp(σB_s + σ²(ν − 1/2)s) ds` with its own
/// generator, independent of the library's path code.
fn sigma_payoffs(spec: &OptionSpec, n: usize, steps: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, nu) = (spec.volatility, spec.drift);
    let dt = spec.horizon / steps as f64;
    (0..n)
        .map(|_| {
            let (mut b, mut prev, mut sum) = (0.0, 1.0, 0.0);
            for k in 1..=steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                b += dt.sqrt() * z;
                let cur = (s * b + s * s * (nu - 0.5) * k as f64 * dt).exp();
                sum += 0.5 * (prev + cur) * dt;
                prev = cur;
            }
            (sum - spec.strike).max(0.0)
        })
        .collect()
}

#[test]
fn volatility_round_trip_matches_direct_sigma_paths() {
    let config = McConfig::default().with_seed(11).with_steps(256);
    for (sigma, nu) in [(2.0, 0.0), (0.5, 0.3)] {
        let spec = OptionSpec::new(0.5, 0.5, nu, sigma).unwrap();
        let via_canonical = pricing::price_direct(&spec, 40_000, &config).unwrap();
        let direct = EstimateWithCI::from_samples(&sigma_payoffs(&spec, 40_000, 256, 99));
        let z = z_score(&via_canonical, &direct);
        assert!(
            z.abs() < 3.0,
            "σ={sigma}: {} vs {} (z = {z})",
            via_canonical.mean,
            direct.mean
        );
    }
}

#[test]
fn canonical_spec_scales_back() {
    let spec = OptionSpec::new(0.7, 1.5, 0.2, 0.8).unwrap();
    let c = canonicalize(&spec);
    assert!((c.spec.horizon * c.scale - spec.horizon).abs() < 1e-15);
    assert!((c.spec.strike * c.scale - spec.strike).abs() < 1e-15);
}

#[test]
fn direct_price_is_convex_nonincreasing_and_above_floor() {
    let s = McConfig::default()
        .with_seed(12)
        .with_steps(256)
        .sample(1.0, 50_000, &[0.0])
        .unwrap();
    let strikes: Vec<f64> = (1..=24).map(|k| 0.125 * k as f64).collect();
    let prices: Vec<EstimateWithCI> = strikes
        .iter()
        .map(|&a| s.price_direct(a, 0.0).unwrap())
        .collect();
    for w in prices.windows(2) {
        assert!(w[1].mean <= w[0].mean);
    }
    for w in prices.windows(3) {
        let second = w[0].mean - 2.0 * w[1].mean + w[2].mean;
        assert!(second >= -3.0 * w[1].stderr);
    }
    for (a, p) in strikes.iter().zip(&prices) {
        assert!(p.mean >= (1.0 - a).max(0.0) - 3.0 * p.stderr);
    }
}

#[test]
fn identity_route_agrees_at_small_strike() {
    let c = McConfig::default().with_seed(13).with_steps(256);
    let r = pricing::price_check(&OptionSpec::martingale(0.5, 1.0).unwrap(), 100_000, &c).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.rhs.mean - 0.5 >= 0.0);
}
