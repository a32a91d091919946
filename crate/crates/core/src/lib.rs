//! Simulation and hypothesis testing for exceedances of generalized
//! Pareto processes.
//!
//! The crate models functional observations `X_t = max(-W/Z_t, floor)`
//! built from a positive unit-mean generator process `Z` and a random
//! scale `W` on [0, 1].  The null hypothesis is that `W` is uniform, which
//! makes `X` a standard generalized Pareto process; two parametric
//! deviation families (a power family indexed by a roughness exponent and
//! exponential families generated by a bounded statistic) describe
//! alternatives concentrated near 0.
//!
//! Everything observable about a threshold exceedance `X >= c` reduces to
//! the pair (exceedance count, exceedance values in [0, 1]), so the crate
//! is organized around that reduction:
//!
//! - [`generator`]: generator processes and the law of their pathwise
//!   infimum, the only generator feature the tests depend on.
//! - [`wmodel`]: the deviation families for `W`.
//! - [`exceedance`]: threshold schedules and exact reduced-form sampling
//!   of exceedance counts and values (plus a functional path sampler used
//!   for validation).
//! - [`teststats`]: count, value, combined-optimal, and omnibus test
//!   statistics, and the exact log-likelihood ratio.
//! - [`asymptotics`]: closed-form local alternatives, power functions,
//!   normal limits of the log-likelihood ratio, and the relative
//!   efficiency curve of the omnibus test.
//! - [`mc`]: deterministic, parallel Monte Carlo verification of those
//!   predictions, configured through [`config`].
//! - [`special`] and [`goodness`]: the numerical kernels (normal cdf and
//!   quantile, adaptive quadrature, Kolmogorov–Smirnov distances, Wilson
//!   intervals).

// Rational-approximation coefficient tables and pinned reference constants
// are transcribed at full published precision; the extra decimal digits
// beyond f64 resolution document their source values.
#![allow(clippy::excessive_precision)]

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod exceedance;
pub mod generator;
pub mod goodness;
pub mod mc;
pub mod rng;
pub mod special;
pub mod teststats;
pub mod wmodel;

pub use asymptotics::LanParams;
pub use config::{ExperimentConfig, GeneratorSpec, TSpec, TestKind, ThresholdSpec, WSpec};
pub use error::{Error, Result};
pub use exceedance::{ExceedanceSample, ThresholdSchedule};
pub use generator::{GeneratorModel, InfLaw, ValidationReport};
pub use mc::{LanCheckReport, MCSummary, PowerCell, ResolvedExperiment, UniformityStatistic};
pub use rng::RandomStream;
pub use teststats::{TestOutcome, TestSide};
pub use wmodel::{TStat, WFamily, WModel};
