//! Simulation and validation of time integrals of geometric Brownian motion.
//!
//! The central object is
//!
//! ```text
//! A_t^(ν) = ∫₀ᵗ exp(B_s + νs − s/2) ds,      A_t = A_t^(0),
//! ```
//!
//! the time integral of the exponential martingale `M_t = exp(B_t − t/2)`
//! (ν = 0) and its drifted relatives. The crate estimates the distribution
//! function, density, exponential moments, and Asian call prices of `A_t` by
//! Monte Carlo. Each quantity is estimated through two independent
//! representations whose agreement is tested. Closed-form laws supply
//! absolute checks.
//!
//! * [`paths`]: exact Brownian increments, quadrature of `A_t^(ν)`, the
//!   Girsanov state `R_t`, Brownian-bridge refinement.
//! * [`estimators`]: CDF, density, moment, and change-of-measure estimators.
//! * [`pricing`]: Asian call prices, direct and by identity.
//! * [`oracles`]: Dufresne's gamma law and Yor's exponential moment.
//! * [`grid`]: the acceptance grid behind `gbm-integrals report`.
//! * [`cli`]: the `gbm-integrals` command-line front end.
//!
//! ```
//! use gbm_integrals::estimators::McConfig;
//!
//! let config = McConfig::default().with_seed(7).with_steps(64);
//! let sample = config.sample(1.0, 4_000, &[0.0, 1.0]).unwrap();
//! let report = sample.density_check(1.0).unwrap();
//! assert!(report.pass);
//! ```

// `!(x > 0.0)` is deliberate throughout: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
mod error;
pub mod estimators;
pub mod grid;
pub mod oracles;
pub mod paths;
pub mod pricing;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use estimators::McConfig;
pub use paths::{PathConfig, PathSample, Sample, Scheme};
pub use pricing::OptionSpec;
pub use stats::{EstimateWithCI, IdentityReport};
