//! Monte Carlo summaries: mergeable moment accumulators, point estimates with
//! heavy-tail diagnostics, and two-estimator identity reports.

use serde::{Deserialize, Serialize};

/// Number of index-ordered blocks behind the median-of-means.
pub const MOM_BLOCKS: usize = 32;

/// Running count/mean/sum of squared deviations with the extremes, merged
/// with Chan's pairwise update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        // weighted form stays exact when both blocks share one value
        let mean = (na * self.mean + nb * other.mean) / n;
        let m2 = self.m2 + other.m2 + delta * delta * na * nb / n;
        Self {
            count,
            mean: if self.mean == other.mean {
                self.mean
            } else {
                mean
            },
            m2,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Self::default();
        xs.iter().for_each(|&x| m.push(x));
        m
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

/// A Monte Carlo point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub mean: f64,
    /// Sample standard deviation over `√n_samples`.
    pub stderr: f64,
    pub n_samples: usize,
    /// Largest single contribution.
    pub max_sample: f64,
    /// Median of [`MOM_BLOCKS`] index-ordered block means.
    pub trimmed_mean: f64,
}

impl EstimateWithCI {
    /// Summarizes per-path contributions, blocked by index so the result is
    /// independent of how the contributions were computed.
    pub fn from_samples(xs: &[f64]) -> Self {
        assert!(!xs.is_empty(), "an estimate needs at least one sample");
        let blocks = MOM_BLOCKS.min(xs.len());
        let block_moments: Vec<Moments> = block_ranges(xs.len(), blocks)
            .map(|r| Moments::from_slice(&xs[r]))
            .collect();
        let total = block_moments
            .iter()
            .fold(Moments::default(), |acc, m| acc.merge(m));
        let mut means: Vec<f64> = block_moments.iter().map(|m| m.mean).collect();
        Self::from_parts(&total, median(&mut means))
    }

    /// Summary of block moments merged in the given order.
    pub fn from_blocks(blocks: &[Moments]) -> Self {
        let total = blocks
            .iter()
            .fold(Moments::default(), |acc, m| acc.merge(m));
        let mut means: Vec<f64> = blocks
            .iter()
            .filter(|m| m.count > 0)
            .map(|m| m.mean)
            .collect();
        Self::from_parts(&total, median(&mut means))
    }

    fn from_parts(total: &Moments, trimmed_mean: f64) -> Self {
        let stderr = if total.min == total.max {
            0.0
        } else {
            (total.variance() / total.count as f64).sqrt()
        };
        Self {
            mean: total.mean,
            stderr,
            n_samples: total.count,
            max_sample: total.max,
            trimmed_mean,
        }
    }

    /// A known value carried through the same reporting surface.
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            n_samples: 1,
            max_sample: value,
            trimmed_mean: value,
        }
    }

    /// The estimate of `scale · X + shift`, for `scale ≥ 0`.
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        debug_assert!(scale >= 0.0);
        Self {
            mean: scale * self.mean + shift,
            stderr: scale * self.stderr,
            n_samples: self.n_samples,
            max_sample: scale * self.max_sample + shift,
            trimmed_mean: scale * self.trimmed_mean + shift,
        }
    }

    /// `max_sample / (n · mean)`: the share of the total carried by one path.
    pub fn dominance(&self) -> f64 {
        self.max_sample / (self.n_samples as f64 * self.mean)
    }
}

pub(crate) fn block_ranges(
    len: usize,
    blocks: usize,
) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..blocks).map(move |b| (b * len / blocks)..((b + 1) * len / blocks))
}

pub(crate) fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_unstable_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    }
}

/// Which identity a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    /// `Pr{A_t ≤ a}` two ways.
    Cdf,
    /// `Pr{A_t^(ν) ≤ a}` two ways.
    CdfDrift,
    /// Sandwich-event density against the difference of two CDFs.
    Density,
    /// Change-of-measure expectation for `f ≡ 1`.
    MeasureChangeOne,
    /// Change-of-measure expectation for `f(x, z) = x`.
    MeasureChangeX,
    /// Change-of-measure expectation for `f(x, z) = x / (−z)`.
    MeasureChangeXOverNegZ,
    /// Change-of-measure expectation for `f(x, z) = x^ν`.
    MeasureChangeXPowNu,
    /// `E[Z_t] = e^y Pr{A_t ≤ 2/y}`.
    Supermartingale,
    /// Asian call price, direct against the closed-form expectation.
    AsianCall,
    /// Simulated Yor expectation against its closed form.
    Yor,
}

impl IdentityId {
    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityId::Cdf => "cdf",
            IdentityId::CdfDrift => "cdf_drift",
            IdentityId::Density => "density",
            IdentityId::MeasureChangeOne => "measure_change_one",
            IdentityId::MeasureChangeX => "measure_change_x",
            IdentityId::MeasureChangeXOverNegZ => "measure_change_x_over_neg_z",
            IdentityId::MeasureChangeXPowNu => "measure_change_x_pow_nu",
            IdentityId::Supermartingale => "supermartingale",
            IdentityId::AsianCall => "asian_call",
            IdentityId::Yor => "yor",
        }
    }
}

/// Parameters shared by both sides of a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityParams {
    pub t: f64,
    /// Level `a` (strike, CDF argument) or `2/y` when the identity is posed in `y`.
    pub a: f64,
    pub nu: f64,
}

/// Default agreement threshold on `|z|`.
pub const Z_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: IdentityId,
    pub params: IdentityParams,
    pub lhs: EstimateWithCI,
    pub rhs: EstimateWithCI,
    pub z_score: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Set where the identity's integrand may lack a second moment, so the
    /// z-score is not trustworthy.
    pub heavy_tail: bool,
}

impl IdentityReport {
    pub fn new(
        identity: IdentityId,
        params: IdentityParams,
        lhs: EstimateWithCI,
        rhs: EstimateWithCI,
        threshold: f64,
    ) -> Self {
        let z_score = z_score(&lhs, &rhs);
        Self {
            identity,
            params,
            lhs,
            rhs,
            z_score,
            threshold,
            pass: z_score.abs() <= threshold,
            heavy_tail: false,
        }
    }

    pub fn with_heavy_tail(mut self, flag: bool) -> Self {
        self.heavy_tail = flag;
        self
    }
}

/// `(lhs − rhs) / √(se_l² + se_r²)`; 0 when both sides agree exactly.
pub fn z_score(lhs: &EstimateWithCI, rhs: &EstimateWithCI) -> f64 {
    let diff = lhs.mean - rhs.mean;
    let se = lhs.stderr.hypot(rhs.stderr);
    if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        diff.signum() * f64::INFINITY
    } else {
        diff / se
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_samples_have_zero_stderr() {
        let e = EstimateWithCI::from_samples(&[2.5; 100]);
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.trimmed_mean, 2.5);
        assert_eq!(e.max_sample, 2.5);
    }

    #[test]
    fn stderr_matches_textbook_formula() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let e = EstimateWithCI::from_samples(&xs);
        let mean = 3.5;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 3.0;
        assert_relative_eq!(e.mean, mean);
        assert_relative_eq!(e.stderr, (var / 4.0).sqrt(), max_relative = 1e-14);
        assert_eq!(e.n_samples, 4);
    }

    #[test]
    fn median_of_means_resists_one_outlier() {
        let mut xs = vec![1.0; 3200];
        xs[5] = 1e9;
        let e = EstimateWithCI::from_samples(&xs);
        assert_eq!(e.trimmed_mean, 1.0);
        assert!(e.mean > 1e5);
        assert!(e.dominance() > 0.99);
    }

    #[test]
    fn z_score_edge_cases() {
        let a = EstimateWithCI::exact(1.0);
        assert_eq!(z_score(&a, &a), 0.0);
        assert_eq!(z_score(&EstimateWithCI::exact(2.0), &a), f64::INFINITY);
        let params = IdentityParams {
            t: 1.0,
            a: 1.0,
            nu: 0.0,
        };
        let r = IdentityReport::new(IdentityId::Cdf, params, a, a, Z_THRESHOLD);
        assert!(r.pass);
    }

    proptest! {
        #[test]
        fn trimmed_mean_is_within_block_means(xs in prop::collection::vec(-1e3f64..1e3, 1..500)) {
            let e = EstimateWithCI::from_samples(&xs);
            let blocks = MOM_BLOCKS.min(xs.len());
            let means: Vec<f64> = block_ranges(xs.len(), blocks)
                .map(|r| Moments::from_slice(&xs[r]).mean)
                .collect();
            let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(e.trimmed_mean >= lo && e.trimmed_mean <= hi);
        }

        #[test]
        fn merging_is_order_independent(
            xs in prop::collection::vec(-1e3f64..1e3, 2..400),
            cuts in prop::collection::vec(0usize..400, 0..6),
            seed in any::<u64>(),
        ) {
            let mut bounds: Vec<usize> = cuts.into_iter().map(|c| c % xs.len()).collect();
            bounds.push(0);
            bounds.push(xs.len());
            bounds.sort_unstable();
            bounds.dedup();
            let mut blocks: Vec<Moments> =
                bounds.windows(2).map(|w| Moments::from_slice(&xs[w[0]..w[1]])).collect();
            let forward = EstimateWithCI::from_blocks(&blocks);
            // deterministic shuffle
            let mut state = seed;
            for i in (1..blocks.len()).rev() {
                state = crate::rng::splitmix64(state);
                blocks.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let shuffled = EstimateWithCI::from_blocks(&blocks);
            let tol = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300) + 1e-12;
            prop_assert!(tol(forward.mean, shuffled.mean));
            prop_assert!(tol(forward.stderr, shuffled.stderr));
            prop_assert_eq!(forward.n_samples, shuffled.n_samples);
            prop_assert_eq!(forward.max_sample, shuffled.max_sample);
            let direct = Moments::from_slice(&xs);
            prop_assert!(tol(forward.mean, direct.mean));
        }
    }
}
