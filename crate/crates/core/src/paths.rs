//! Brownian paths and the exponential functionals built on them.
//!
//! Brownian motion is sampled exactly on the grid `s_k = kΔt` from Gaussian
//! increments. The one approximation anywhere in the crate is the quadrature
//! of the time integral
//!
//! ```text
//! A_t^(ν) = ∫₀ᵗ exp(B_s + νs − s/2) ds
//! ```
//!
//! over those exact grid values. [`Scheme::Trapezoid`] is the default;
//! [`Scheme::LeftRiemann`] is kept for bias-sensitivity studies.
//!
//! Several drifts can be integrated along the same increments: the integrand
//! factors as `exp(B_s) · exp((ν − 1/2)s)`, so each extra drift costs one
//! multiply-add per step.

use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{finite, positive, Error, Result};
use crate::rng::{with_threads, Noise, StreamFactory};

/// Quadrature rule for the time integral.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    LeftRiemann,
    #[default]
    Trapezoid,
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "left-riemann" | "left" => Ok(Scheme::LeftRiemann),
            "trapezoid" | "trap" => Ok(Scheme::Trapezoid),
            other => Err(format!(
                "unknown scheme `{other}` (expected left-riemann or trapezoid)"
            )),
        }
    }
}

/// Parameters of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub horizon: f64,
    pub steps: usize,
    pub drift: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl PathConfig {
    pub fn new(horizon: f64, steps: usize, drift: f64, seed: u64) -> Result<Self> {
        let config = Self {
            horizon,
            steps,
            drift,
            seed,
            scheme: Scheme::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Horizon 0 is accepted as the degenerate path with an empty integral.
    pub fn validate(&self) -> Result<()> {
        finite("horizon", self.horizon)?;
        if self.horizon < 0.0 {
            return Err(Error::NegativeHorizon(self.horizon));
        }
        if self.steps == 0 {
            return Err(Error::ZeroSteps);
        }
        finite("drift", self.drift)?;
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Same path on a grid twice as fine.
    pub fn refined(&self) -> Self {
        Self {
            steps: self.steps * 2,
            ..*self
        }
    }
}

/// Girsanov state `R_t = −M_t / (y⁻¹ − A_t/2)` at the horizon, with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GirsanovState {
    pub y: f64,
    /// `None` once the running integral has reached `2/y`.
    pub value: Option<f64>,
    pub blown: bool,
}

/// Terminal functionals of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    /// `B_t`
    pub terminal_log: f64,
    /// `M_t = exp(B_t − t/2)`
    pub martingale: f64,
    /// `A_t^(ν)` for the configured drift.
    pub integral: f64,
    /// `A_t / M_t`, always with ν = 0.
    pub ratio: f64,
    pub girsanov: Option<GirsanovState>,
}

impl PathSample {
    pub fn blown(&self) -> bool {
        self.girsanov.is_some_and(|g| g.blown)
    }

    /// Functionals of a path driven by explicit increments.
    pub fn from_increments(
        config: &PathConfig,
        increments: &BrownianIncrements,
        y: Option<f64>,
    ) -> Result<Self> {
        config.validate()?;
        if increments.len() != config.steps {
            return Err(Error::TooFewSamples {
                min: config.steps,
                got: increments.len(),
            });
        }
        let mut it = increments.values().iter().copied();
        path_sample(config, y, || it.next().unwrap_or(0.0))
    }
}

/// Simulates path 0 of the stream keyed by `config.seed`.
pub fn simulate_path(config: &PathConfig, y: Option<f64>) -> Result<PathSample> {
    simulate_path_at(config, 0, y)
}

/// Simulates path `index` of the stream keyed by `config.seed`. Batches draw
/// path `i` from the same stream, so this reproduces any member in isolation.
pub fn simulate_path_at(config: &PathConfig, index: u64, y: Option<f64>) -> Result<PathSample> {
    config.validate()?;
    let sd = config.dt().sqrt();
    let mut rng = StreamFactory::new(config.seed).stream(index);
    path_sample(config, y, || sd * normal(&mut rng))
}

fn path_sample(
    config: &PathConfig,
    y: Option<f64>,
    mut increment: impl FnMut() -> f64,
) -> Result<PathSample> {
    let y = y.map(|y| positive("y", y)).transpose()?;
    let drifts: Vec<f64> = if config.drift == 0.0 {
        vec![0.0]
    } else {
        vec![0.0, config.drift]
    };
    let grid = DriftGrid::new(&drifts, config.steps, config.dt());
    let mut acc = Accumulator::new(&grid, config.scheme);
    let barrier = y.map(|y| 2.0 / y);
    let mut blown = false;
    for _ in 0..config.steps {
        acc.step(increment());
        if let Some(barrier) = barrier {
            blown |= acc.integral(0) >= barrier;
        }
    }
    let t = config.horizon;
    let b = acc.terminal_log();
    let martingale = (b - 0.5 * t).exp();
    let base = acc.integral(0);
    let integral = acc.integral(drifts.len() - 1);
    let girsanov = y.map(|y| GirsanovState {
        y,
        value: (!blown).then(|| girsanov_value(martingale, base, y)),
        blown,
    });
    Ok(PathSample {
        terminal_log: b,
        martingale,
        integral,
        ratio: base / martingale,
        girsanov,
    })
}

#[inline]
pub(crate) fn girsanov_value(martingale: f64, integral: f64, y: f64) -> f64 {
    -martingale / (1.0 / y - 0.5 * integral)
}

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Where a set of increments came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    /// Path `index` of the root `seed`, refined `level` times.
    Seeded { seed: u64, index: u64, level: u32 },
    /// Supplied by the caller.
    Forced,
}

/// Gaussian increments `B_{s_{k+1}} − B_{s_k}` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianIncrements {
    dt: f64,
    values: Vec<f64>,
    tag: StreamTag,
}

impl BrownianIncrements {
    /// The increments [`simulate_path_at`] uses for path `index`.
    pub fn generate(seed: u64, index: u64, steps: usize, dt: f64) -> Self {
        let sd = dt.sqrt();
        let mut rng = StreamFactory::new(seed).stream(index);
        let values = (0..steps).map(|_| sd * normal(&mut rng)).collect();
        Self {
            dt,
            values,
            tag: StreamTag::Seeded {
                seed,
                index,
                level: 0,
            },
        }
    }

    pub fn for_path(config: &PathConfig, index: u64) -> Self {
        Self::generate(config.seed, index, config.steps, config.dt())
    }

    /// All-zero increments: a noiseless path for deterministic checks.
    pub fn zeros(steps: usize, dt: f64) -> Self {
        Self::from_values(vec![0.0; steps], dt)
    }

    pub fn from_values(values: Vec<f64>, dt: f64) -> Self {
        Self {
            dt,
            values,
            tag: StreamTag::Forced,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tag(&self) -> StreamTag {
        self.tag
    }

    /// `B` at the grid points `s_0 = 0, …, s_n`.
    pub fn grid_values(&self) -> Vec<f64> {
        let mut b = 0.0;
        std::iter::once(0.0)
            .chain(self.values.iter().map(|d| {
                b += d;
                b
            }))
            .collect()
    }

    /// Brownian-bridge midpoint insertion: each increment `d` over `Δ` splits
    /// into `d/2 ± (√Δ/2)·z`. The refined path passes through every coarse
    /// grid value, so coarse and fine paths share one Brownian motion.
    /// Forced increments refine with `z = 0`.
    pub fn refine(&self) -> Self {
        let half = 0.5 * self.dt.sqrt();
        let mut bridge: Box<dyn FnMut() -> f64> = match self.tag {
            StreamTag::Seeded { seed, index, level } => {
                let mut rng = StreamFactory::for_level(seed, level + 1).stream(index);
                Box::new(move || normal(&mut rng))
            }
            StreamTag::Forced => Box::new(|| 0.0),
        };
        let mut values = Vec::with_capacity(2 * self.values.len());
        for &d in &self.values {
            let z = half * bridge();
            values.push(0.5 * d + z);
            values.push(0.5 * d - z);
        }
        let tag = match self.tag {
            StreamTag::Seeded { seed, index, level } => StreamTag::Seeded {
                seed,
                index,
                level: level + 1,
            },
            StreamTag::Forced => StreamTag::Forced,
        };
        Self {
            dt: 0.5 * self.dt,
            values,
            tag,
        }
    }
}

/// Residual of the integral form of `dR = R dB − ½R² dt` along one path:
///
/// ```text
/// R_t − (−y + Σ R_{s_k} ΔB_k − ½ Σ R_{s_k}² Δt)
/// ```
///
/// with `R` evaluated from the quadrature `A` at each grid point. `None` if
/// the path reaches `A ≥ 2/y`.
pub fn girsanov_residual(
    config: &PathConfig,
    increments: &BrownianIncrements,
    y: f64,
) -> Result<Option<f64>> {
    config.validate()?;
    positive("y", y)?;
    if increments.len() != config.steps {
        return Err(Error::TooFewSamples {
            min: config.steps,
            got: increments.len(),
        });
    }
    let dt = config.dt();
    let grid = DriftGrid::new(&[0.0], config.steps, dt);
    let mut acc = Accumulator::new(&grid, config.scheme);
    let mut r = -y;
    let mut ito = 0.0;
    let mut quad = 0.0;
    for (k, &db) in increments.values().iter().enumerate() {
        ito += r * db;
        quad += r * r * dt;
        acc.step(db);
        let a = acc.integral(0);
        if a >= 2.0 / y {
            return Ok(None);
        }
        let s = (k + 1) as f64 * dt;
        let m = (acc.terminal_log() - 0.5 * s).exp();
        r = girsanov_value(m, a, y);
    }
    Ok(Some(r - (-y + ito - 0.5 * quad)))
}

/// Grid factors `exp((ν − 1/2)s_k)`, `k = 0..=steps`, one row per drift.
pub(crate) struct DriftGrid {
    dt: f64,
    rows: Vec<Vec<f64>>,
}

impl DriftGrid {
    pub(crate) fn new(drifts: &[f64], steps: usize, dt: f64) -> Self {
        let rows = drifts
            .iter()
            .map(|nu| {
                (0..=steps)
                    .map(|k| ((nu - 0.5) * k as f64 * dt).exp())
                    .collect()
            })
            .collect();
        Self { dt, rows }
    }
}

/// Running quadrature of `exp(B_s)` against each row of a [`DriftGrid`].
pub(crate) struct Accumulator<'a> {
    grid: &'a DriftGrid,
    scheme: Scheme,
    b: f64,
    k: usize,
    prev: Vec<f64>,
    sums: Vec<f64>,
}

impl<'a> Accumulator<'a> {
    pub(crate) fn new(grid: &'a DriftGrid, scheme: Scheme) -> Self {
        let rows = grid.rows.len();
        Self {
            grid,
            scheme,
            b: 0.0,
            k: 0,
            prev: vec![1.0; rows],
            sums: vec![0.0; rows],
        }
    }

    #[inline]
    pub(crate) fn step(&mut self, db: f64) {
        self.b += db;
        self.k += 1;
        let e = self.b.exp();
        let k = self.k;
        for ((row, prev), sum) in self
            .grid
            .rows
            .iter()
            .zip(&mut self.prev)
            .zip(&mut self.sums)
        {
            let cur = e * row[k];
            *sum += match self.scheme {
                Scheme::Trapezoid => 0.5 * (*prev + cur),
                Scheme::LeftRiemann => *prev,
            };
            *prev = cur;
        }
    }

    #[inline]
    pub(crate) fn integral(&self, row: usize) -> f64 {
        self.sums[row] * self.grid.dt
    }

    #[inline]
    pub(crate) fn terminal_log(&self) -> f64 {
        self.b
    }
}

/// A batch simulation: `n` paths on one grid, several drifts integrated along
/// shared increments, functionals recorded at one or more grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSpec {
    pub horizon: f64,
    pub steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub noise: Noise,
    pub drifts: Vec<f64>,
    /// Recording times; each must fall on the grid. Empty means the horizon.
    pub snapshots: Vec<f64>,
}

impl BatchSpec {
    pub fn new(horizon: f64, steps: usize, seed: u64, drifts: &[f64]) -> Self {
        Self {
            horizon,
            steps,
            seed,
            scheme: Scheme::default(),
            noise: Noise::default(),
            drifts: drifts.to_vec(),
            snapshots: Vec::new(),
        }
    }

    fn snapshot_steps(&self) -> Result<Vec<usize>> {
        let dt = self.horizon / self.steps as f64;
        if self.snapshots.is_empty() {
            return Ok(vec![self.steps]);
        }
        let mut last = 0.0;
        let mut out = Vec::with_capacity(self.snapshots.len());
        for &t in &self.snapshots {
            if !(t > last) || t > self.horizon * (1.0 + 1e-12) {
                return Err(Error::UnorderedTimes);
            }
            let k = (t / dt).round();
            if (k * dt - t).abs() > 1e-9 * t.max(1.0) || k < 1.0 {
                return Err(Error::OffGrid(t));
            }
            out.push(k as usize);
            last = t;
        }
        Ok(out)
    }
}

/// Terminal functionals of every path of a batch at one recording time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    t: f64,
    steps: usize,
    drifts: Vec<f64>,
    terminal_log: Vec<f64>,
    integrals: Vec<Vec<f64>>,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.terminal_log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal_log.is_empty()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Grid steps between 0 and `t`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn drifts(&self) -> &[f64] {
        &self.drifts
    }

    /// `B_t` per path.
    pub fn terminal_log(&self) -> &[f64] {
        &self.terminal_log
    }

    /// `A_t^(ν)` per path.
    pub fn integrals(&self, nu: f64) -> Result<&[f64]> {
        self.drifts
            .iter()
            .position(|d| (d - nu).abs() <= 1e-12)
            .map(|i| self.integrals[i].as_slice())
            .ok_or(Error::MissingDrift(nu))
    }

    /// `M_t` for path `i`.
    #[inline]
    pub fn martingale(&self, i: usize) -> f64 {
        (self.terminal_log[i] - 0.5 * self.t).exp()
    }

    /// `exp(B_t + νt − t/2)`, the integrand of `A^(ν)` at the horizon.
    #[inline]
    pub fn terminal_integrand(&self, i: usize, nu: f64) -> f64 {
        (self.terminal_log[i] + (nu - 0.5) * self.t).exp()
    }
}

/// Simulates `n` paths. Path `i` uses stream `i` of `spec.seed`, so the output
/// does not depend on `threads`.
pub fn simulate_batch(spec: &BatchSpec, n: usize, threads: Option<usize>) -> Result<Vec<Sample>> {
    positive("horizon", spec.horizon)?;
    if spec.steps == 0 {
        return Err(Error::ZeroSteps);
    }
    if spec.drifts.is_empty() {
        return Err(Error::MissingDrift(0.0));
    }
    for &nu in &spec.drifts {
        finite("drift", nu)?;
    }
    crate::error::min_samples(n, 1)?;
    let snaps = spec.snapshot_steps()?;
    let dt = spec.horizon / spec.steps as f64;
    let last = *snaps.last().expect("at least one snapshot");
    let width = 1 + spec.drifts.len();
    let stride = snaps.len() * width;
    let grid = DriftGrid::new(&spec.drifts, last, dt);
    let factory = StreamFactory::new(spec.seed);
    let sd = dt.sqrt();

    let mut rows = vec![0.0; n * stride];
    with_threads(threads, || {
        rows.par_chunks_mut(stride)
            .enumerate()
            .for_each(|(i, out)| {
                let mut rng = factory.stream(i as u64);
                let mut acc = Accumulator::new(&grid, spec.scheme);
                let mut next = 0;
                for k in 1..=last {
                    let db = match spec.noise {
                        Noise::Gaussian => sd * normal(&mut rng),
                        Noise::Zero => 0.0,
                    };
                    acc.step(db);
                    if k == snaps[next] {
                        let cell = &mut out[next * width..(next + 1) * width];
                        cell[0] = acc.terminal_log();
                        for (d, slot) in cell[1..].iter_mut().enumerate() {
                            *slot = acc.integral(d);
                        }
                        next += 1;
                    }
                }
            });
    })?;

    Ok(snaps
        .iter()
        .enumerate()
        .map(|(s, &k)| {
            let column = |c: usize| -> Vec<f64> {
                rows.iter()
                    .skip(s * width + c)
                    .step_by(stride)
                    .copied()
                    .collect()
            };
            Sample {
                t: k as f64 * dt,
                steps: k,
                drifts: spec.drifts.clone(),
                terminal_log: column(0),
                integrals: (1..width).map(column).collect(),
            }
        })
        .collect())
}
