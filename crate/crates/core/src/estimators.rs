//! Monte Carlo estimators for the distribution, density, and exponential
//! moments of `A_t`.
//!
//! Every identity is estimated two ways, once directly (frequencies,
//! indicators) and once through the change-of-measure representation. The two
//! estimates must agree. Both sides are evaluated on one shared [`Sample`]
//! (common random numbers).
//!
//! The free functions follow the one-call shape `op(t, …, n, config)` and
//! simulate a fresh sample each time. For grids of parameters, simulate once
//! with [`McConfig::sample`] and call the [`Sample`] methods directly.
//!
//! Several right-hand-side integrands, e.g. `exp(2M_t/(a + A_t))`, have a
//! finite mean but possibly no second moment. Every estimate therefore carries
//! `max_sample` and a median-of-means `trimmed_mean`, and reports over such
//! integrands are marked [`IdentityReport::heavy_tail`] outside
//! `a ≥ 0.5, t ≤ 4`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{min_samples, positive, Error, Result};
use crate::paths::{simulate_batch, BatchSpec, Sample, Scheme};
use crate::rng::{with_threads, Noise};
use crate::stats::{EstimateWithCI, IdentityId, IdentityParams, IdentityReport, Z_THRESHOLD};

/// Settings shared by every estimator call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Grid steps over the horizon.
    pub steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub noise: Noise,
    /// Worker threads; `None` uses the global pool. Results do not depend on it.
    pub threads: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            steps: 2048,
            seed: 0,
            scheme: Scheme::Trapezoid,
            noise: Noise::Gaussian,
            threads: None,
        }
    }
}

impl McConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn batch_spec(&self, horizon: f64, drifts: &[f64]) -> BatchSpec {
        BatchSpec {
            scheme: self.scheme,
            noise: self.noise,
            ..BatchSpec::new(horizon, self.steps, self.seed, drifts)
        }
    }

    /// `n` paths over `[0, t]` with the given drifts integrated on shared increments.
    pub fn sample(&self, t: f64, n: usize, drifts: &[f64]) -> Result<Sample> {
        positive("t", t)?;
        let mut samples = simulate_batch(&self.batch_spec(t, drifts), n, self.threads)?;
        Ok(samples.pop().expect("one snapshot"))
    }

    /// One sample per recording time, all from the same paths.
    pub fn sample_at(&self, times: &[f64], n: usize, drifts: &[f64]) -> Result<Vec<Sample>> {
        check_increasing(times)?;
        let horizon = *times.last().expect("checked non-empty");
        let mut spec = self.batch_spec(horizon, drifts);
        spec.snapshots = times.to_vec();
        simulate_batch(&spec, n, self.threads)
    }
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if times.is_empty() || !(times[0] > 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::UnorderedTimes);
    }
    Ok(())
}

/// `true` where the change-of-measure integrands may lack a second moment.
pub fn heavy_tail_region(t: f64, a: f64) -> bool {
    a < 0.5 || t > 4.0
}

/// Exponent of a moment `E[exp(·)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentVariant {
    /// `θ / ∫₀ᵗ exp(B_s) ds`, i.e. `θ / A_t^(1/2)`.
    NoDrift,
    /// `2θ / A_t`.
    HalfDrift,
    /// `θ M_t / A_t`.
    RatioMoverA,
}

impl std::str::FromStr for MomentVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "no-drift" => Ok(Self::NoDrift),
            "half-drift" => Ok(Self::HalfDrift),
            "ratio" | "ratio-m-over-a" => Ok(Self::RatioMoverA),
            other => Err(format!("unknown moment variant `{other}`")),
        }
    }
}

impl MomentVariant {
    fn drift(&self) -> f64 {
        match self {
            MomentVariant::NoDrift => 0.5,
            MomentVariant::HalfDrift | MomentVariant::RatioMoverA => 0.0,
        }
    }
}

/// Running means start at this sample size and double up to `n`.
pub const RUNNING_MEAN_START: usize = 1 << 16;
/// Growth per doubling that counts as "failing to stabilize".
pub const DIVERGENCE_GROWTH: f64 = 0.10;
/// `max_sample / (n · mean)` above this is single-sample domination.
pub const DOMINANCE_LIMIT: f64 = 0.5;

/// An exponential moment with divergence diagnostics.
///
/// Simulation cannot prove a moment infinite. `diverging` is an operational
/// proxy: the running mean grows by more than [`DIVERGENCE_GROWTH`] at every
/// doubling, or one path carries more than [`DOMINANCE_LIMIT`] of the total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub theta: f64,
    pub variant: MomentVariant,
    pub estimate: EstimateWithCI,
    /// `(size, mean of the first size paths)` over doubling sizes.
    pub running_means: Vec<(usize, f64)>,
    pub dominated: bool,
    pub diverging: bool,
}

impl MomentEstimate {
    /// Largest relative change between consecutive running means.
    pub fn max_relative_change(&self) -> f64 {
        self.running_means
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / w[0].1).abs())
            .fold(0.0, f64::max)
    }

    /// Every doubling changes the running mean by less than `tolerance`.
    pub fn stable(&self, tolerance: f64) -> bool {
        self.running_means.len() >= 2 && self.max_relative_change() < tolerance
    }
}

/// Doubling sample sizes ending at the largest power of two `≤ n`. Starts at
/// [`RUNNING_MEAN_START`] when `n` allows at least one doubling, otherwise
/// covers the last four doublings.
pub fn doubling_sizes(n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let top = usize::BITS - 1 - n.leading_zeros();
    let first = if n >= 2 * RUNNING_MEAN_START {
        RUNNING_MEAN_START.trailing_zeros()
    } else {
        top.saturating_sub(4)
    };
    (first..=top).map(|k| 1usize << k).collect()
}

/// Change-of-measure test function `f(x, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    One,
    X,
    XOverNegZ,
    XPowNu(f64),
}

impl TestFunction {
    fn eval(&self, x: f64, z: f64) -> f64 {
        match *self {
            TestFunction::One => 1.0,
            TestFunction::X => x,
            TestFunction::XOverNegZ => x / -z,
            TestFunction::XPowNu(nu) => x.powf(nu),
        }
    }

    fn identity(&self) -> IdentityId {
        match self {
            TestFunction::One => IdentityId::MeasureChangeOne,
            TestFunction::X => IdentityId::MeasureChangeX,
            TestFunction::XOverNegZ => IdentityId::MeasureChangeXOverNegZ,
            TestFunction::XPowNu(_) => IdentityId::MeasureChangeXPowNu,
        }
    }
}

/// One point of the lower-tail probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub a: f64,
    /// Paths with `A_t^(1/2) ≤ a`.
    pub hits: usize,
    /// `(e^{2/a}/a) · Pr{A_t^(1/2) ≤ a}`; `None` (censored) without hits.
    pub value: Option<EstimateWithCI>,
}

/// Result of the supermartingale check over a list of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupermartingaleReport {
    pub y: f64,
    pub reports: Vec<IdentityReport>,
    /// Sample means of `Z_t` strictly decrease along the times.
    pub strictly_decreasing: bool,
}

impl SupermartingaleReport {
    pub fn pass(&self) -> bool {
        self.strictly_decreasing && self.reports.iter().all(|r| r.pass)
    }
}

impl Sample {
    fn estimate(&self, f: impl Fn(usize) -> f64 + Sync + Send) -> EstimateWithCI {
        let values: Vec<f64> = (0..self.len()).into_par_iter().map(f).collect();
        EstimateWithCI::from_samples(&values)
    }

    /// Frequency of `{A_t^(ν) ≤ a}`.
    pub fn cdf_direct(&self, a: f64, nu: f64) -> Result<EstimateWithCI> {
        positive("a", a)?;
        let integrals = self.integrals(nu)?;
        Ok(self.estimate(|i| if integrals[i] <= a { 1.0 } else { 0.0 }))
    }

    /// `e^{−2/a} E[exp(2M_t/(a + A_t))]` over all paths.
    pub fn cdf_identity(&self, a: f64) -> Result<EstimateWithCI> {
        positive("a", a)?;
        let integrals = self.integrals(0.0)?;
        Ok(self.estimate(|i| (2.0 * self.martingale(i) / (a + integrals[i]) - 2.0 / a).exp()))
    }

    /// `a^{2ν} e^{−2/a} E[(a + A_t^(ν))^{−2ν} exp(2e^{B_t + νt − t/2}/(a + A_t^(ν)))]`.
    pub fn cdf_identity_drift(&self, a: f64, nu: f64) -> Result<EstimateWithCI> {
        positive("a", a)?;
        let integrals = self.integrals(nu)?;
        Ok(self.estimate(|i| {
            let denom = a + integrals[i];
            let power = 2.0 * nu * (a / denom).ln();
            (power + (2.0 * self.terminal_integrand(i, nu) / denom - 2.0 / a)).exp()
        }))
    }

    /// Direct and identity CDF estimates as one report.
    pub fn cdf_check(&self, a: f64, nu: f64) -> Result<IdentityReport> {
        let lhs = self.cdf_direct(a, nu)?;
        let (id, rhs) = if nu == 0.0 {
            (IdentityId::Cdf, self.cdf_identity(a)?)
        } else {
            (IdentityId::CdfDrift, self.cdf_identity_drift(a, nu)?)
        };
        let params = IdentityParams { t: self.t(), a, nu };
        Ok(IdentityReport::new(id, params, lhs, rhs, Z_THRESHOLD)
            .with_heavy_tail(heavy_tail_region(self.t(), a)))
    }

    /// `(2/a²)` times the frequency of `{A_t ≤ a < A_t^(1)}`.
    pub fn density_event(&self, a: f64) -> Result<EstimateWithCI> {
        positive("a", a)?;
        let lower = self.integrals(0.0)?;
        let upper = self.integrals(1.0)?;
        let scale = 2.0 / (a * a);
        Ok(self.estimate(|i| {
            if lower[i] <= a && a < upper[i] {
                scale
            } else {
                0.0
            }
        }))
    }

    /// `(2/a²)(Pr{A_t ≤ a} − Pr{A_t/M_t ≤ a})`.
    pub fn density_difference(&self, a: f64) -> Result<EstimateWithCI> {
        positive("a", a)?;
        let integrals = self.integrals(0.0)?;
        let scale = 2.0 / (a * a);
        Ok(self.estimate(|i| {
            let below = (integrals[i] <= a) as u8 as f64;
            let ratio_below = (integrals[i] / self.martingale(i) <= a) as u8 as f64;
            scale * (below - ratio_below)
        }))
    }

    pub fn density_check(&self, a: f64) -> Result<IdentityReport> {
        let params = IdentityParams {
            t: self.t(),
            a,
            nu: 0.0,
        };
        Ok(IdentityReport::new(
            IdentityId::Density,
            params,
            self.density_event(a)?,
            self.density_difference(a)?,
            Z_THRESHOLD,
        ))
    }

    /// Trapezoid integral of [`Sample::density_event`] over `points` log-spaced
    /// levels in `[lo, hi]`.
    pub fn density_mass(&self, lo: f64, hi: f64, points: usize) -> Result<f64> {
        let grid = log_grid(lo, hi, points)?;
        let values = grid
            .iter()
            .map(|&a| self.density_event(a).map(|e| e.mean))
            .collect::<Result<Vec<_>>>()?;
        Ok(grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, g)| 0.5 * (g[0] + g[1]) * (x[1] - x[0]))
            .sum())
    }

    pub fn exp_moment(&self, theta: f64, variant: MomentVariant) -> Result<MomentEstimate> {
        crate::error::finite("theta", theta)?;
        let integrals = self.integrals(variant.drift())?;
        let values: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let a = integrals[i];
                let exponent = match variant {
                    MomentVariant::NoDrift => theta / a,
                    MomentVariant::HalfDrift => 2.0 * theta / a,
                    MomentVariant::RatioMoverA => theta * self.martingale(i) / a,
                };
                // θ = 0 must give exactly 1 even if A underflows to 0
                if theta == 0.0 {
                    1.0
                } else {
                    exponent.exp()
                }
            })
            .collect();
        let estimate = EstimateWithCI::from_samples(&values);
        let running_means = running_means(&values);
        let dominated = estimate.dominance() > DOMINANCE_LIMIT;
        let growing = running_means.len() >= 2
            && running_means
                .windows(2)
                .all(|w| w[1].1 > (1.0 + DIVERGENCE_GROWTH) * w[0].1);
        let diverging = dominated || growing || !estimate.mean.is_finite();
        Ok(MomentEstimate {
            theta,
            variant,
            estimate,
            running_means,
            dominated,
            diverging,
        })
    }

    /// Both sides of the change-of-measure identity at `y`.
    pub fn measure_change(&self, y: f64, f: TestFunction) -> Result<IdentityReport> {
        positive("y", y)?;
        let integrals = self.integrals(0.0)?;
        let barrier = 2.0 / y;
        let lhs = self.estimate(|i| {
            let a = integrals[i];
            if a < barrier {
                let m = self.martingale(i);
                f.eval(m, crate::paths::girsanov_value(m, a, y))
            } else {
                0.0
            }
        });
        let rhs = self.estimate(|i| {
            let a = integrals[i];
            let m = self.martingale(i);
            let denom = 1.0 / y + 0.5 * a;
            let x = m / (1.0 + 0.5 * y * a).powi(2);
            let weight = m / denom - y;
            match f {
                // log form: x^ν can overflow where the product does not
                TestFunction::XPowNu(nu) => (nu * x.ln() + weight).exp(),
                _ => f.eval(x, -m / denom) * weight.exp(),
            }
        });
        let nu = match f {
            TestFunction::XPowNu(nu) => nu,
            _ => 0.0,
        };
        let params = IdentityParams {
            t: self.t(),
            a: barrier,
            nu,
        };
        Ok(
            IdentityReport::new(f.identity(), params, lhs, rhs, Z_THRESHOLD)
                .with_heavy_tail(heavy_tail_region(self.t(), barrier)),
        )
    }

    /// `E[Z_t]` with `Z_t = exp(M_t / (y⁻¹ + A_t/2))` against `e^y Pr{A_t ≤ 2/y}`.
    pub fn supermartingale(&self, y: f64) -> Result<IdentityReport> {
        positive("y", y)?;
        let integrals = self.integrals(0.0)?;
        let lhs = self.estimate(|i| (self.martingale(i) / (1.0 / y + 0.5 * integrals[i])).exp());
        let rhs = self.cdf_direct(2.0 / y, 0.0)?.affine(y.exp(), 0.0);
        let params = IdentityParams {
            t: self.t(),
            a: 2.0 / y,
            nu: 0.0,
        };
        Ok(
            IdentityReport::new(IdentityId::Supermartingale, params, lhs, rhs, Z_THRESHOLD)
                .with_heavy_tail(heavy_tail_region(self.t(), 2.0 / y)),
        )
    }

    /// `(e^{2/a}/a) · Pr{A_t^(1/2) ≤ a}` along a decreasing grid.
    pub fn lower_tail(&self, a_grid: &[f64]) -> Result<Vec<TailPoint>> {
        check_decreasing(a_grid)?;
        let integrals = self.integrals(0.5)?;
        a_grid
            .iter()
            .map(|&a| {
                let hits = integrals.iter().filter(|&&x| x <= a).count();
                let value = if hits == 0 {
                    None
                } else {
                    let scale = (2.0 / a).exp() / a;
                    Some(self.cdf_direct(a, 0.5)?.affine(scale, 0.0))
                };
                Ok(TailPoint { a, hits, value })
            })
            .collect()
    }
}

fn running_means(values: &[f64]) -> Vec<(usize, f64)> {
    let sizes = doubling_sizes(values.len());
    let mut out = Vec::with_capacity(sizes.len());
    let mut sum = 0.0;
    let mut seen = 0;
    for size in sizes {
        sum += values[seen..size].iter().sum::<f64>();
        seen = size;
        out.push((size, sum / size as f64));
    }
    out
}

fn check_decreasing(grid: &[f64]) -> Result<()> {
    if grid.is_empty()
        || grid.iter().any(|&a| !(a > 0.0) || !a.is_finite())
        || grid.windows(2).any(|w| !(w[1] < w[0]))
    {
        return Err(Error::UnorderedGrid);
    }
    Ok(())
}

/// `points` levels spaced evenly in `ln a` from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    positive("lo", lo)?;
    positive("hi", hi)?;
    min_samples(points, 2)?;
    let (l, h) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|k| {
            if k + 1 == points {
                hi
            } else {
                (l + (h - l) * k as f64 / (points - 1) as f64).exp()
            }
        })
        .collect())
}

/// Whether the uncensored tail values are nondecreasing as `a` decreases, up
/// to overlap of their 3-stderr intervals.
pub fn tail_nondecreasing(points: &[TailPoint]) -> bool {
    let values: Vec<EstimateWithCI> = points.iter().filter_map(|p| p.value).collect();
    values
        .windows(2)
        .all(|w| w[1].mean + 3.0 * w[1].stderr >= w[0].mean - 3.0 * w[0].stderr)
}

fn validate(t: f64, n: usize) -> Result<()> {
    positive("t", t)?;
    min_samples(n, 1)?;
    Ok(())
}

/// Frequency of `{A_t^(ν) ≤ a}` over `n` fresh paths.
pub fn cdf_direct(t: f64, a: f64, nu: f64, n: usize, config: &McConfig) -> Result<EstimateWithCI> {
    validate(t, n)?;
    positive("a", a)?;
    config.sample(t, n, &[nu])?.cdf_direct(a, nu)
}

pub fn cdf_identity(t: f64, a: f64, n: usize, config: &McConfig) -> Result<EstimateWithCI> {
    validate(t, n)?;
    positive("a", a)?;
    config.sample(t, n, &[0.0])?.cdf_identity(a)
}

pub fn cdf_identity_drift(
    t: f64,
    a: f64,
    nu: f64,
    n: usize,
    config: &McConfig,
) -> Result<EstimateWithCI> {
    validate(t, n)?;
    positive("a", a)?;
    config.sample(t, n, &[nu])?.cdf_identity_drift(a, nu)
}

/// Both CDF routes on one sample.
pub fn cdf_check(t: f64, a: f64, nu: f64, n: usize, config: &McConfig) -> Result<IdentityReport> {
    validate(t, n)?;
    positive("a", a)?;
    let drifts = if nu == 0.0 { vec![0.0] } else { vec![nu] };
    config.sample(t, n, &drifts)?.cdf_check(a, nu)
}

pub fn density_event(t: f64, a: f64, n: usize, config: &McConfig) -> Result<EstimateWithCI> {
    validate(t, n)?;
    positive("a", a)?;
    config.sample(t, n, &[0.0, 1.0])?.density_event(a)
}

pub fn density_difference(t: f64, a: f64, n: usize, config: &McConfig) -> Result<EstimateWithCI> {
    validate(t, n)?;
    positive("a", a)?;
    config.sample(t, n, &[0.0])?.density_difference(a)
}

pub fn density_check(t: f64, a: f64, n: usize, config: &McConfig) -> Result<IdentityReport> {
    validate(t, n)?;
    positive("a", a)?;
    config.sample(t, n, &[0.0, 1.0])?.density_check(a)
}

pub fn exp_moment(
    t: f64,
    theta: f64,
    variant: MomentVariant,
    n: usize,
    config: &McConfig,
) -> Result<MomentEstimate> {
    validate(t, n)?;
    config
        .sample(t, n, &[variant.drift()])?
        .exp_moment(theta, variant)
}

pub fn measure_change_check(
    t: f64,
    y: f64,
    f: TestFunction,
    n: usize,
    config: &McConfig,
) -> Result<IdentityReport> {
    validate(t, n)?;
    positive("y", y)?;
    config.sample(t, n, &[0.0])?.measure_change(y, f)
}

/// Reports at each time from one set of paths recorded along the way.
pub fn supermartingale_check(
    y: f64,
    times: &[f64],
    n: usize,
    config: &McConfig,
) -> Result<SupermartingaleReport> {
    positive("y", y)?;
    min_samples(n, 1)?;
    let samples = config.sample_at(times, n, &[0.0])?;
    let reports = samples
        .iter()
        .map(|s| s.supermartingale(y))
        .collect::<Result<Vec<_>>>()?;
    let strictly_decreasing = reports.windows(2).all(|w| w[1].lhs.mean < w[0].lhs.mean);
    Ok(SupermartingaleReport {
        y,
        reports,
        strictly_decreasing,
    })
}

pub fn lower_tail_probe(
    t: f64,
    a_grid: &[f64],
    n: usize,
    config: &McConfig,
) -> Result<Vec<TailPoint>> {
    validate(t, n)?;
    check_decreasing(a_grid)?;
    config.sample(t, n, &[0.5])?.lower_tail(a_grid)
}

/// Runs `f` on the thread pool requested by `config`.
pub fn in_pool<R: Send>(config: &McConfig, f: impl FnOnce() -> R + Send) -> Result<R> {
    with_threads(config.threads, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg(seed: u64) -> McConfig {
        McConfig::default().with_seed(seed).with_steps(128)
    }

    #[test]
    fn huge_level_saturates_both_cdf_routes() {
        let s = cfg(1).sample(1.0, 2000, &[0.0, -1.0, 0.5, 1.0]).unwrap();
        assert_eq!(s.cdf_direct(1e6, 0.0).unwrap().mean, 1.0);
        assert_abs_diff_eq!(s.cdf_identity(1e6).unwrap().mean, 1.0, epsilon = 1e-4);
        for nu in [-1.0, 0.5, 1.0] {
            assert_abs_diff_eq!(
                s.cdf_identity_drift(1e6, nu).unwrap().mean,
                1.0,
                epsilon = 1e-4
            );
        }
    }

    #[test]
    fn noiseless_cdf_is_a_step() {
        let mut c = cfg(0);
        c.noise = Noise::Zero;
        assert_eq!(cdf_direct(1.0, 0.5, 0.0, 100, &c).unwrap().mean, 0.0);
        assert_eq!(cdf_direct(1.0, 0.8, 0.0, 100, &c).unwrap().mean, 1.0);
    }

    #[test]
    fn tiny_horizon_identity_tends_to_one() {
        let s = cfg(2).with_steps(16).sample(1e-6, 1000, &[0.0]).unwrap();
        for a in [0.5, 1.0, 2.0] {
            assert_abs_diff_eq!(s.cdf_identity(a).unwrap().mean, 1.0, epsilon = 1e-2);
        }
    }

    #[test]
    fn drift_zero_collapses_bit_exactly() {
        let s = cfg(3).sample(1.0, 500, &[0.0]).unwrap();
        assert_eq!(
            s.cdf_identity(0.7).unwrap(),
            s.cdf_identity_drift(0.7, 0.0).unwrap()
        );
    }

    #[test]
    fn rejects_non_positive_levels() {
        let c = cfg(0);
        assert!(matches!(
            cdf_direct(1.0, 0.0, 0.0, 10, &c),
            Err(Error::NonPositive { .. })
        ));
        assert!(matches!(
            cdf_identity(1.0, -1.0, 10, &c),
            Err(Error::NonPositive { .. })
        ));
        assert!(matches!(
            density_event(1.0, 0.0, 10, &c),
            Err(Error::NonPositive { .. })
        ));
        assert!(exp_moment(0.0, 1.0, MomentVariant::NoDrift, 10, &c).is_err());
        assert!(matches!(
            measure_change_check(1.0, 0.0, TestFunction::One, 10, &c),
            Err(Error::NonPositive { .. })
        ));
        assert_eq!(
            supermartingale_check(1.0, &[1.0, 0.5], 10, &c),
            Err(Error::UnorderedTimes)
        );
        assert_eq!(
            lower_tail_probe(1.0, &[0.5, 0.8], 10, &c),
            Err(Error::UnorderedGrid)
        );
        assert!(matches!(
            cdf_direct(1.0, 1.0, 0.0, 0, &c),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn zero_theta_moment_is_exactly_one() {
        let s = cfg(4).sample(1.0, 1000, &[0.0, 0.5]).unwrap();
        for v in [
            MomentVariant::NoDrift,
            MomentVariant::HalfDrift,
            MomentVariant::RatioMoverA,
        ] {
            let m = s.exp_moment(0.0, v).unwrap();
            assert_eq!(m.estimate.mean, 1.0);
            assert_eq!(m.estimate.stderr, 0.0);
            assert!(s.exp_moment(-1.0, v).unwrap().estimate.mean < 1.0);
        }
    }

    #[test]
    fn doubling_sizes_cover_spec_window() {
        assert_eq!(
            doubling_sizes(1 << 20),
            vec![1 << 16, 1 << 17, 1 << 18, 1 << 19, 1 << 20]
        );
        assert_eq!(
            doubling_sizes(1_000_000),
            vec![1 << 16, 1 << 17, 1 << 18, 1 << 19]
        );
        assert_eq!(doubling_sizes(1000), vec![32, 64, 128, 256, 512]);
    }

    #[test]
    fn huge_level_density_vanishes_and_tail_saturates() {
        let s = cfg(5).sample(1.0, 1000, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(s.density_event(1e6).unwrap().mean, 0.0);
        let tail = s.lower_tail(&[1e6]).unwrap();
        let v = tail[0].value.unwrap().mean;
        assert_abs_diff_eq!(v, (2e-6f64).exp() / 1e6, epsilon = 1e-15);
    }

    #[test]
    fn censored_tail_points_are_not_zero() {
        let s = cfg(6).sample(1.0, 200, &[0.5]).unwrap();
        let tail = s.lower_tail(&[0.05]).unwrap();
        assert_eq!(tail[0].hits, 0);
        assert!(tail[0].value.is_none());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.01, 20.0, 256).unwrap();
        assert_eq!(g.len(), 256);
        assert_abs_diff_eq!(g[0], 0.01, epsilon = 1e-15);
        assert_eq!(g[255], 20.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
