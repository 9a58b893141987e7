//! Closed-form laws used as absolute checks on the simulator.
//!
//! Two results are available in closed form:
//!
//! * Dufresne's infinite-horizon law: `∫₀^∞ exp(−2B_s − μs) ds` has the law
//!   of `1/(2γ)` with `γ` gamma-distributed of index `μ/2`, so its CDF is the
//!   upper regularized gamma function `Q(μ/2, 1/(2x))`.
//! * Yor's exponential moment: for `Ã_t = ∫₀ᵗ exp(2B_s) ds`,
//!   `E[Ã_t^{−1/2} exp(−u²/(2Ã_t))] = ((1+u²)t)^{−1/2} exp(−(asinh u)²/(2t))`.
//!
//! Both are compared against simulations of `A^(ν)` after a time change.

use serde::{Deserialize, Serialize};

use crate::error::{finite, min_samples, positive, Result};
use crate::estimators::McConfig;
use crate::paths::{simulate_batch, Sample};
use crate::stats::{EstimateWithCI, IdentityId, IdentityParams, IdentityReport, Z_THRESHOLD};

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    #[allow(clippy::excessive_precision)] // published coefficients, kept verbatim
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

/// Lower regularized incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_p requires a > 0, x >= 0");
    if x == 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Upper regularized incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_q requires a > 0, x >= 0");
    if x == 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

fn prefactor(a: f64, x: f64) -> f64 {
    (a * x.ln() - x - ln_gamma(a)).exp()
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * prefactor(a, x)
}

// Modified Lentz evaluation of the continued fraction for Q.
fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    prefactor(a, x) * h
}

/// Index parameter `μ` of the infinite-horizon law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaLawSpec {
    pub mu: f64,
}

impl GammaLawSpec {
    pub fn new(mu: f64) -> Result<Self> {
        positive("mu", mu)?;
        Ok(Self { mu })
    }

    /// Drift `ν` with `∫₀^T exp(−2B_s − μs) ds =(law) ¼ A^(ν)_{4T}`.
    ///
    /// With `s = r/4`, `2B_{r/4}` is a standard Brownian motion in `r`, and
    /// `−μr/4 = (ν − 1/2)r` fixes `ν = 1/2 − μ/4`.
    pub fn time_changed_drift(&self) -> f64 {
        0.5 - 0.25 * self.mu
    }

    /// Truncation horizon `10/μ`.
    pub fn default_truncation(&self) -> f64 {
        10.0 / self.mu
    }
}

/// `Pr{1/(2γ_{μ/2}) ≤ x} = Q(μ/2, 1/(2x))`.
pub fn dufresne_cdf(x: f64, spec: &GammaLawSpec) -> Result<f64> {
    positive("x", x)?;
    positive("mu", spec.mu)?;
    Ok(gamma_q(0.5 * spec.mu, 0.5 / x))
}

/// Smallest sample the KS check accepts.
pub const KS_MIN_SAMPLES: usize = 1000;
/// Kolmogorov critical value at α ≈ 0.01, in units of `1/√n`.
pub const KS_CRITICAL: f64 = 1.63;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub simulated_mu: f64,
    pub oracle_mu: f64,
    pub truncation: f64,
    pub n: usize,
    /// `sup |F_n − F|` against the oracle.
    pub statistic: f64,
    /// `1.63/√n`.
    pub critical: f64,
    /// `sup |F_n(T) − F_n(2T)|` between the truncated samples at `T` and `2T`.
    pub allowance: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// One-sample KS statistic of `xs` against `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic `sup |F_a − F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Samples of `∫₀^T` and `∫₀^{2T} exp(−2B_s − μs) ds` along the same paths.
///
/// `config.steps` is the grid over `[0, T]`; the extension to `2T` uses the
/// same step.
pub fn dufresne_samples(
    spec: &GammaLawSpec,
    truncation: f64,
    n: usize,
    config: &McConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    positive("truncation", truncation)?;
    positive("mu", spec.mu)?;
    min_samples(n, 1)?;
    let nu = spec.time_changed_drift();
    let mut batch = config.batch_spec(8.0 * truncation, &[nu]);
    batch.steps = 2 * config.steps;
    batch.snapshots = vec![4.0 * truncation, 8.0 * truncation];
    let samples = simulate_batch(&batch, n, config.threads)?;
    let quarter = |s: &Sample| -> Result<Vec<f64>> {
        Ok(s.integrals(nu)?.iter().map(|x| 0.25 * x).collect())
    };
    Ok((quarter(&samples[0])?, quarter(&samples[1])?))
}

pub fn dufresne_ks_check(
    spec: &GammaLawSpec,
    truncation: f64,
    n: usize,
    config: &McConfig,
) -> Result<KsReport> {
    dufresne_ks_against(spec, spec, truncation, n, config)
}

/// Simulates under `simulated` and tests against the `oracle` law. With
/// different laws this is a negative control and should fail.
pub fn dufresne_ks_against(
    simulated: &GammaLawSpec,
    oracle: &GammaLawSpec,
    truncation: f64,
    n: usize,
    config: &McConfig,
) -> Result<KsReport> {
    min_samples(n, KS_MIN_SAMPLES)?;
    positive("mu", oracle.mu)?;
    let (at_t, at_2t) = dufresne_samples(simulated, truncation, n, config)?;
    ks_report(simulated, oracle, truncation, &at_t, &at_2t)
}

/// KS verdict for samples already drawn by [`dufresne_samples`], so one
/// simulation can serve both a check and its negative control.
pub fn ks_report(
    simulated: &GammaLawSpec,
    oracle: &GammaLawSpec,
    truncation: f64,
    at_t: &[f64],
    at_2t: &[f64],
) -> Result<KsReport> {
    let n = at_t.len();
    min_samples(n, KS_MIN_SAMPLES)?;
    positive("mu", oracle.mu)?;
    let shape = 0.5 * oracle.mu;
    let statistic = ks_statistic(at_t, |x| {
        if x > 0.0 {
            gamma_q(shape, 0.5 / x)
        } else {
            0.0
        }
    });
    let allowance = ks_two_sample(at_t, at_2t);
    let critical = KS_CRITICAL / (n as f64).sqrt();
    let threshold = critical + allowance;
    Ok(KsReport {
        simulated_mu: simulated.mu,
        oracle_mu: oracle.mu,
        truncation,
        n,
        statistic,
        critical,
        allowance,
        threshold,
        pass: statistic <= threshold,
    })
}

/// `((1+u²)t)^{−1/2} exp(−(asinh u)²/(2t))`.
pub fn yor_closed_form(u: f64, t: f64) -> Result<f64> {
    finite("u", u)?;
    positive("t", t)?;
    let s = u.asinh();
    Ok(((1.0 + u * u) * t).sqrt().recip() * (-s * s / (2.0 * t)).exp())
}

/// Horizon of `A^(1/2)` whose functional matches Yor's `Ã_t`: `Ã_t =(law) ¼ A^(1/2)_{4t}`.
///
/// With `s = r/4`, `∫₀ᵗ exp(2B_s) ds = ¼ ∫₀^{4t} exp(W_r) dr` for the Brownian
/// motion `W_r = 2B_{r/4}`.
pub fn yor_horizon(t: f64) -> f64 {
    4.0 * t
}

impl Sample {
    /// Mean of `2 exp(−2u²/A) / √A` with `A = A^(1/2)` at this sample's horizon.
    pub fn yor_functional(&self, u: f64) -> Result<EstimateWithCI> {
        finite("u", u)?;
        let integrals = self.integrals(0.5)?;
        let values: Vec<f64> = integrals
            .iter()
            .map(|&a| 2.0 * (-2.0 * u * u / a).exp() / a.sqrt())
            .collect();
        Ok(EstimateWithCI::from_samples(&values))
    }

    /// Simulated Yor moment against the closed form at `t = horizon / 4`.
    pub fn yor_check(&self, u: f64) -> Result<IdentityReport> {
        let t = 0.25 * self.t();
        let exact = EstimateWithCI::exact(yor_closed_form(u, t)?);
        let params = IdentityParams { t, a: u, nu: 0.5 };
        Ok(IdentityReport::new(
            IdentityId::Yor,
            params,
            self.yor_functional(u)?,
            exact,
            Z_THRESHOLD,
        ))
    }
}

pub fn yor_mc_check(u: f64, t: f64, n: usize, config: &McConfig) -> Result<IdentityReport> {
    finite("u", u)?;
    positive("t", t)?;
    min_samples(n, 1)?;
    config.sample(yor_horizon(t), n, &[0.5])?.yor_check(u)
}
