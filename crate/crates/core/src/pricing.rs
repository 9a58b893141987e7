//! Asian call prices `E[(∫₀ᵗ X_s ds − a)⁺]` for the underlying
//! `X_s = exp(σB_s + σ²(ν − 1/2)s)`.
//!
//! The substitution `s = r/σ²` gives
//!
//! ```text
//! ∫₀ᵗ X_s ds  =(law)  σ⁻² A_{σ²t}^(ν)
//! ```
//!
//! so a volatility-`σ` contract is the unit-volatility contract with horizon
//! `σ²t` and strike `σ²a`, its price scaled by `σ⁻²`. See [`canonicalize`].
//!
//! Two routes are available. [`price_direct`] averages the payoff for any
//! drift. [`price_identity`] uses
//!
//! ```text
//! E[(A_t − a)⁺] = t − a + a² E[(a + A_t)⁻¹ exp(2M_t/(a + A_t) − 2/a)]
//! ```
//!
//! which holds for the martingale case ν = 0 only.

use serde::{Deserialize, Serialize};

use crate::error::{finite, min_samples, positive, Error, Result};
use crate::estimators::{heavy_tail_region, McConfig};
use crate::paths::Sample;
use crate::stats::{EstimateWithCI, IdentityId, IdentityParams, IdentityReport, Z_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub strike: f64,
    pub horizon: f64,
    pub drift: f64,
    pub volatility: f64,
}

impl OptionSpec {
    pub fn new(strike: f64, horizon: f64, drift: f64, volatility: f64) -> Result<Self> {
        let spec = Self {
            strike,
            horizon,
            drift,
            volatility,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Unit volatility, drift 0.
    pub fn martingale(strike: f64, horizon: f64) -> Result<Self> {
        Self::new(strike, horizon, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        positive("strike", self.strike)?;
        positive("horizon", self.horizon)?;
        finite("drift", self.drift)?;
        positive("volatility", self.volatility)?;
        Ok(())
    }
}

/// A unit-volatility contract and the factor that maps its price back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canonical {
    /// Horizon `σ²t`, strike `σ²a`, volatility 1.
    pub spec: OptionSpec,
    /// `σ⁻²`, applied to the integral, and hence the price, of the canonical contract.
    pub scale: f64,
}

pub fn canonicalize(spec: &OptionSpec) -> Canonical {
    let s2 = spec.volatility * spec.volatility;
    if s2 == 1.0 {
        return Canonical {
            spec: *spec,
            scale: 1.0,
        };
    }
    Canonical {
        spec: OptionSpec {
            strike: s2 * spec.strike,
            horizon: s2 * spec.horizon,
            drift: spec.drift,
            volatility: 1.0,
        },
        scale: 1.0 / s2,
    }
}

impl Sample {
    /// Mean of `(A_t^(ν) − a)⁺` (unit volatility).
    pub fn price_direct(&self, strike: f64, nu: f64) -> Result<EstimateWithCI> {
        positive("strike", strike)?;
        let integrals = self.integrals(nu)?;
        let values: Vec<f64> = integrals.iter().map(|&x| (x - strike).max(0.0)).collect();
        Ok(EstimateWithCI::from_samples(&values))
    }

    /// `t − a + a²·mean((a + A_t)⁻¹ exp(2M_t/(a + A_t) − 2/a))` (unit volatility, ν = 0).
    pub fn price_identity(&self, strike: f64) -> Result<EstimateWithCI> {
        positive("strike", strike)?;
        let integrals = self.integrals(0.0)?;
        let (t, a) = (self.t(), strike);
        let values: Vec<f64> = integrals
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let denom = a + x;
                let correction = (2.0 * self.martingale(i) / denom - 2.0 / a).exp() / denom;
                t - a + a * a * correction
            })
            .collect();
        Ok(EstimateWithCI::from_samples(&values))
    }

    pub fn price_check(&self, strike: f64) -> Result<IdentityReport> {
        let params = IdentityParams {
            t: self.t(),
            a: strike,
            nu: 0.0,
        };
        Ok(IdentityReport::new(
            IdentityId::AsianCall,
            params,
            self.price_direct(strike, 0.0)?,
            self.price_identity(strike)?,
            Z_THRESHOLD,
        )
        .with_heavy_tail(heavy_tail_region(self.t(), strike)))
    }
}

fn canonical_sample(spec: &OptionSpec, n: usize, config: &McConfig) -> Result<(Canonical, Sample)> {
    spec.validate()?;
    min_samples(n, 1)?;
    let canonical = canonicalize(spec);
    let sample = config.sample(canonical.spec.horizon, n, &[canonical.spec.drift])?;
    Ok((canonical, sample))
}

pub fn price_direct(spec: &OptionSpec, n: usize, config: &McConfig) -> Result<EstimateWithCI> {
    let (c, sample) = canonical_sample(spec, n, config)?;
    Ok(sample
        .price_direct(c.spec.strike, c.spec.drift)?
        .affine(c.scale, 0.0))
}

pub fn price_identity(spec: &OptionSpec, n: usize, config: &McConfig) -> Result<EstimateWithCI> {
    if spec.drift != 0.0 {
        return Err(Error::UnsupportedDrift(spec.drift));
    }
    let (c, sample) = canonical_sample(spec, n, config)?;
    Ok(sample.price_identity(c.spec.strike)?.affine(c.scale, 0.0))
}

/// Both routes on one sample; the report is in the caller's (uncanonicalized) units.
pub fn price_check(spec: &OptionSpec, n: usize, config: &McConfig) -> Result<IdentityReport> {
    if spec.drift != 0.0 {
        return Err(Error::UnsupportedDrift(spec.drift));
    }
    let (c, sample) = canonical_sample(spec, n, config)?;
    let report = sample.price_check(c.spec.strike)?;
    let params = IdentityParams {
        t: spec.horizon,
        a: spec.strike,
        nu: 0.0,
    };
    Ok(IdentityReport::new(
        IdentityId::AsianCall,
        params,
        report.lhs.affine(c.scale, 0.0),
        report.rhs.affine(c.scale, 0.0),
        report.threshold,
    )
    .with_heavy_tail(report.heavy_tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_volatility_is_fixed_point() {
        let spec = OptionSpec::new(1.3, 2.0, 0.25, 1.0).unwrap();
        let c = canonicalize(&spec);
        assert_eq!(c.spec, spec);
        assert_eq!(c.scale, 1.0);
    }

    #[test]
    fn volatility_two_quadruples_horizon() {
        let c = canonicalize(&OptionSpec::new(1.0, 1.0, 0.0, 2.0).unwrap());
        assert_eq!(c.spec.horizon, 4.0);
        assert_eq!(c.spec.strike, 4.0);
        assert_eq!(c.scale, 0.25);
        assert_eq!(c.spec.volatility, 1.0);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(OptionSpec::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(OptionSpec::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(OptionSpec::new(1.0, 1.0, 0.0, 0.0).is_err());
        let spec = OptionSpec::new(1.0, 1.0, 0.3, 1.0).unwrap();
        let c = McConfig::default().with_steps(16);
        assert_eq!(
            price_identity(&spec, 10, &c),
            Err(Error::UnsupportedDrift(0.3))
        );
        let spec = OptionSpec::martingale(1.0, 1.0).unwrap();
        assert!(matches!(
            price_direct(&spec, 0, &c),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn tiny_strike_limits() {
        let c = McConfig::default().with_steps(64).with_seed(3);
        let spec = OptionSpec::martingale(1e-8, 1.0).unwrap();
        let direct = price_direct(&spec, 20_000, &c).unwrap();
        assert!((direct.mean - 1.0).abs() <= 3.0 * direct.stderr);
        let identity = price_identity(&spec, 2_000, &c).unwrap();
        assert_abs_diff_eq!(identity.mean, 1.0 - 1e-8, epsilon = 1e-12);
    }

    #[test]
    fn deep_out_of_the_money_is_worthless() {
        let c = McConfig::default().with_steps(64);
        let spec = OptionSpec::martingale(1e6, 1.0).unwrap();
        assert_eq!(price_direct(&spec, 1000, &c).unwrap().mean, 0.0);
    }

    #[test]
    fn identity_correction_is_positive() {
        let s = McConfig::default()
            .with_steps(64)
            .sample(1.0, 2000, &[0.0])
            .unwrap();
        for a in [0.5, 1.0, 2.0] {
            assert!(s.price_identity(a).unwrap().mean - (1.0 - a) > 0.0);
        }
    }
}
