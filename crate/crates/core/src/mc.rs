//! Monte Carlo experiment engine.
//!
//! Runs replicated exceedance experiments and compares empirical rejection
//! rates, null distributions, and log-likelihood-ratio moments against the
//! closed-form predictions in [`crate::asymptotics`].
//!
//! # Determinism
//!
//! Replication `r` draws exclusively from the RNG substream keyed by
//! `(seed, r)`, and results are collected in replication order before any
//! reduction.  Identical `(config, seed)` therefore produce bit-identical
//! output regardless of how many threads the surrounding rayon pool uses.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{
    drift_omnibus_delta, drift_optimal_delta, lan_params_delta, lan_params_expfam,
    power_prediction, theta_n_delta, theta_n_expfam, LanParams,
};
use crate::config::{ExperimentConfig, TestKind};
use crate::error::{Error, Result};
use crate::exceedance::simulate;
use crate::generator::InfLaw;
use crate::goodness::{ks_critical_1pct, ks_distance, wilson_interval, WILSON_99_Z};
use crate::rng::RandomStream;
use crate::special::std_normal_cdf;
use crate::teststats::{
    loglik_ratio, omnibus_statistic, omnibus_test, optimal_test_delta, optimal_test_expfam,
    TestOutcome, TestSide,
};
use crate::wmodel::{WFamily, WModel};

/// Absolute slack granted to empirical means of the log-likelihood ratio
/// on top of the relative tolerance (small predicted means would otherwise
/// demand unrealistic replication budgets).
pub const LAN_MEAN_ABS_TOLERANCE: f64 = 0.03;

/// One Monte Carlo estimate next to its asymptotic prediction.
///
/// For rejection rates the interval is a 99% Wilson interval over the
/// effective replications; for moments it is a 99% normal-theory interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCSummary {
    /// Empirical rejection frequency, moment, or distance.
    pub estimate: f64,
    /// Lower 99% confidence bound (`ci_low <= estimate`).
    pub ci_low: f64,
    /// Upper 99% confidence bound (`estimate <= ci_high`).
    pub ci_high: f64,
    /// Replications (or pooled observations) actually contributing.
    pub r_effective: usize,
    /// Closed-form prediction the estimate is compared against.
    pub asymptotic_prediction: f64,
    /// Whether the estimate is compatible with the prediction under the
    /// configured tolerance policy.
    pub within_tolerance: bool,
}

/// Null-distribution statistic checked by [`ks_uniformity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniformityStatistic {
    /// One omnibus statistic per replication, compared against the
    /// standard normal distribution.
    OmnibusNormal,
    /// All exceedance values pooled across replications, compared against
    /// the uniform distribution on [0, 1].
    PooledValues,
}

/// Empirical check of the normal limit of the log-likelihood ratio.
#[derive(Debug, Clone, Serialize)]
pub struct LanCheckReport {
    /// Family parameter the likelihood ratio was evaluated at.
    pub theta: f64,
    /// Predicted limit parameters.
    pub predicted: LanParams,
    /// Empirical mean against the predicted null mean.
    pub mean: MCSummary,
    /// Empirical variance against the predicted limit variance.
    pub variance: MCSummary,
    /// Relative tolerance both moments were held to.
    pub relative_tolerance: f64,
    /// Replications used.
    pub replications: usize,
}

impl LanCheckReport {
    /// Both moments within tolerance.
    pub fn passed(&self) -> bool {
        self.mean.within_tolerance && self.variance.within_tolerance
    }
}

/// One cell of a power table: a `(xi, test)` pair with either a summary or
/// an error marker, so partial failures keep the remaining rows.
#[derive(Debug, Clone, Serialize)]
pub struct PowerCell {
    /// Local alternative parameter of this cell.
    pub xi: f64,
    /// Test evaluated.
    pub test: TestKind,
    /// Rejection side.
    pub side: TestSide,
    /// Monte Carlo result, if the cell ran.
    pub summary: Option<MCSummary>,
    /// Error message, if it did not.
    pub error: Option<String>,
}

/// An experiment configuration resolved to concrete model objects.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    /// Threshold level at the configured sample size.
    pub c: f64,
    /// Family parameter corresponding to `(xi, n, c)`.
    pub theta: f64,
    /// Family member at `theta` (the sampling distribution of `W`).
    pub model: WModel,
    /// Deviation family.
    pub family: WFamily,
    /// Law of the generator's pathwise infimum.
    pub law: InfLaw,
    /// Mean of the infimum law.
    pub inf_mean: f64,
}

/// Resolve a configuration to model objects, validating every component
/// and recomputing the family parameter from `(xi, n, c)`.
pub fn resolve(cfg: &ExperimentConfig) -> Result<ResolvedExperiment> {
    cfg.validate()?;
    let generator = cfg.generator.build()?;
    let law = generator.inf_law()?;
    let inf_mean = law.mean();
    if !(inf_mean.is_finite() && inf_mean > 0.0) {
        return Err(Error::InvalidModel(
            "the generator's infimum mean must be positive; count statistics \
             are undefined when the pathwise infimum vanishes"
                .into(),
        ));
    }
    let family = cfg.w.build()?;
    let c = cfg.threshold.resolve(&family)?.at(cfg.n)?;
    let theta = theta_for(&family, cfg.xi, cfg.n, c, inf_mean)?;
    let model = family.model(theta)?;
    Ok(ResolvedExperiment {
        c,
        theta,
        model,
        family,
        law,
        inf_mean,
    })
}

/// Family parameter of the local alternative indexed by `xi` at `(n, c)`.
fn theta_for(family: &WFamily, xi: f64, n: usize, c: f64, inf_mean: f64) -> Result<f64> {
    if xi == 0.0 {
        return Ok(0.0);
    }
    match family {
        WFamily::Delta { delta, .. } => theta_n_delta(xi, n, c, *delta),
        WFamily::ExpFamily { t } => {
            theta_n_expfam(xi, n, c, inf_mean, t.limit_at_zero(), t.integral())
        }
    }
}

/// Signed limit drift of `test` under the family's local alternative.
fn drift_for(
    family: &WFamily,
    law: &InfLaw,
    inf_mean: f64,
    xi: f64,
    test: TestKind,
) -> Result<f64> {
    match (test, family) {
        (TestKind::Optimal, WFamily::Delta { delta, .. }) => {
            let inf_moment = law.moment(1.0 + delta);
            Ok(drift_optimal_delta(xi, inf_mean, inf_moment, *delta))
        }
        (TestKind::Omnibus, WFamily::Delta { delta, .. }) => {
            let inf_moment = law.moment(1.0 + delta);
            drift_omnibus_delta(xi, inf_mean, inf_moment, *delta)
        }
        // The count statistic's drift is xi by construction of the
        // exponential-family reparametrization.
        (TestKind::Optimal, WFamily::ExpFamily { .. }) => Ok(xi),
        // Exceedance values stay exactly uniform in exponential families:
        // value-based tests are blind to these alternatives.
        (TestKind::Omnibus, WFamily::ExpFamily { .. }) => Ok(0.0),
    }
}

fn apply_test(
    sample: &crate::exceedance::ExceedanceSample,
    test: TestKind,
    family: &WFamily,
    inf_mean: f64,
    alpha: f64,
    side: TestSide,
) -> Result<TestOutcome> {
    match (test, family) {
        (TestKind::Optimal, WFamily::Delta { delta, .. }) => {
            optimal_test_delta(sample, inf_mean, *delta, alpha, side)
        }
        (TestKind::Optimal, WFamily::ExpFamily { .. }) => {
            optimal_test_expfam(sample, inf_mean, alpha, side)
        }
        (TestKind::Omnibus, _) => omnibus_test(sample, alpha, side),
    }
}

/// Run `replications` independent units on the current rayon pool, each on
/// its own `(seed, index)` substream, and return results in replication
/// order.  The first error in replication order wins, independent of
/// scheduling.
fn run_reps<T, F>(replications: usize, seed: u64, body: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut RandomStream) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = RandomStream::substream(seed, r as u64);
            body(r, &mut rng)
        })
        .collect();
    let mut out = Vec::with_capacity(replications);
    for res in results {
        out.push(res?);
    }
    Ok(out)
}

#[derive(Clone, Copy)]
struct RepOutcome {
    abstained: bool,
    rejected: bool,
}

/// Estimate the rejection rate of `test` under the configured experiment
/// and compare it against the asymptotic power prediction.
///
/// Abstaining replications (no exceedances for a value-based test) are
/// excluded from the denominator and reported through `r_effective`.
/// `within_tolerance` holds when the estimate is within the configured
/// absolute tolerance of the prediction or the 99% interval covers it.
pub fn estimate_rejection_rate(
    cfg: &ExperimentConfig,
    test: TestKind,
    side: TestSide,
) -> Result<MCSummary> {
    let exp = resolve(cfg)?;
    let drift = drift_for(&exp.family, &exp.law, exp.inf_mean, cfg.xi, test)?;
    let prediction = power_prediction(drift, cfg.alpha, side)?;
    let outcomes = run_reps(cfg.replications, cfg.seed, |_, rng| {
        let sample = simulate(cfg.n, exp.c, &exp.model, &exp.law, rng)?;
        let outcome = apply_test(&sample, test, &exp.family, exp.inf_mean, cfg.alpha, side)?;
        Ok(RepOutcome {
            abstained: outcome.abstained,
            rejected: outcome.reject,
        })
    })?;
    let abstained = outcomes.iter().filter(|o| o.abstained).count();
    let rejected = outcomes.iter().filter(|o| o.rejected).count();
    let r_effective = cfg.replications - abstained;
    if r_effective == 0 {
        return Err(Error::NoExceedances(
            "every replication abstained (no exceedances); lower |c| or raise n".into(),
        ));
    }
    let estimate = rejected as f64 / r_effective as f64;
    let (ci_low, ci_high) = wilson_interval(rejected, r_effective, WILSON_99_Z)?;
    let within_tolerance = (estimate - prediction).abs() <= cfg.power_tolerance
        || (ci_low <= prediction && prediction <= ci_high);
    Ok(MCSummary {
        estimate,
        ci_low,
        ci_high,
        r_effective,
        asymptotic_prediction: prediction,
        within_tolerance,
    })
}

fn ks_summary(distance: f64, size: usize) -> MCSummary {
    let critical = ks_critical_1pct(size);
    MCSummary {
        estimate: distance,
        ci_low: distance,
        ci_high: distance,
        r_effective: size,
        asymptotic_prediction: critical,
        within_tolerance: distance < critical,
    }
}

/// Kolmogorov–Smirnov check of a null-distribution claim: the omnibus
/// statistic is standard normal, and exceedance values are uniform.
///
/// The `estimate` is the KS distance, the `asymptotic_prediction` the 1%
/// critical value `1.63/sqrt(size)`, and `r_effective` the KS sample size
/// (replications with exceedances, or pooled values).
pub fn ks_uniformity_check(
    cfg: &ExperimentConfig,
    statistic: UniformityStatistic,
) -> Result<MCSummary> {
    if cfg.xi != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "uniformity checks are null-distribution checks; set xi = 0 (got {})",
            cfg.xi
        )));
    }
    if cfg.replications < 2 {
        return Err(Error::InvalidConfig(
            "a Kolmogorov-Smirnov check needs at least 2 replications".into(),
        ));
    }
    let exp = resolve(cfg)?;
    match statistic {
        UniformityStatistic::OmnibusNormal => {
            let stats = run_reps(cfg.replications, cfg.seed, |_, rng| {
                let sample = simulate(cfg.n, exp.c, &exp.model, &exp.law, rng)?;
                if sample.tau() == 0 {
                    Ok(None)
                } else {
                    omnibus_statistic(&sample).map(Some)
                }
            })?;
            let values: Vec<f64> = stats.into_iter().flatten().collect();
            if values.is_empty() {
                return Err(Error::NoExceedances(
                    "no replication produced an exceedance; the omnibus statistic \
                     is undefined everywhere"
                        .into(),
                ));
            }
            Ok(ks_summary(
                ks_distance(&values, std_normal_cdf)?,
                values.len(),
            ))
        }
        UniformityStatistic::PooledValues => {
            let reps = run_reps(cfg.replications, cfg.seed, |_, rng| {
                Ok(simulate(cfg.n, exp.c, &exp.model, &exp.law, rng)?.ys)
            })?;
            let pooled: Vec<f64> = reps.into_iter().flatten().collect();
            if pooled.is_empty() {
                return Err(Error::NoExceedances(
                    "no replication produced an exceedance; there are no values to pool".into(),
                ));
            }
            Ok(ks_summary(
                ks_distance(&pooled, |y| y.clamp(0.0, 1.0))?,
                pooled.len(),
            ))
        }
    }
}

/// Simulate the log-likelihood ratio at `theta_n(xi)` under the null and
/// compare its empirical mean and variance against the predicted normal
/// limit.
pub fn lan_empirical_check(cfg: &ExperimentConfig) -> Result<LanCheckReport> {
    if cfg.replications < 2 {
        return Err(Error::InvalidConfig(
            "an empirical moment check needs at least 2 replications".into(),
        ));
    }
    let exp = resolve(cfg)?;
    let null = exp.family.model(0.0)?;
    let predicted = match &exp.family {
        WFamily::Delta { delta, .. } => {
            lan_params_delta(cfg.xi, exp.inf_mean, exp.law.moment(1.0 + delta), *delta)?
        }
        WFamily::ExpFamily { .. } => lan_params_expfam(cfg.xi),
    };
    let ratios = run_reps(cfg.replications, cfg.seed, |r, rng| {
        let sample = simulate(cfg.n, exp.c, &null, &exp.law, rng)?;
        loglik_ratio(&sample, exp.theta, &exp.family, &exp.law)
            .map_err(|e| Error::Evaluation(format!("replication {r}: {e}")))
    })?;
    let count = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / count;
    let variance = ratios.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (count - 1.0);

    let mean_tol =
        (cfg.lan_relative_tolerance * predicted.mean_h0.abs()).max(LAN_MEAN_ABS_TOLERANCE);
    let mean_within = (mean - predicted.mean_h0).abs() <= mean_tol;
    let variance_within = if predicted.sigma2 == 0.0 {
        variance == 0.0
    } else {
        (variance - predicted.sigma2).abs() <= cfg.lan_relative_tolerance * predicted.sigma2
    };
    let mean_se = (variance / count).sqrt();
    let variance_se = variance * (2.0 / (count - 1.0)).sqrt();
    Ok(LanCheckReport {
        theta: exp.theta,
        predicted,
        mean: MCSummary {
            estimate: mean,
            ci_low: mean - WILSON_99_Z * mean_se,
            ci_high: mean + WILSON_99_Z * mean_se,
            r_effective: ratios.len(),
            asymptotic_prediction: predicted.mean_h0,
            within_tolerance: mean_within,
        },
        variance: MCSummary {
            estimate: variance,
            ci_low: variance - WILSON_99_Z * variance_se,
            ci_high: variance + WILSON_99_Z * variance_se,
            r_effective: ratios.len(),
            asymptotic_prediction: predicted.sigma2,
            within_tolerance: variance_within,
        },
        relative_tolerance: cfg.lan_relative_tolerance,
        replications: ratios.len(),
    })
}

/// Rejection rates over the configured `(xi, test)` grid.  Cells that fail
/// (for example a `xi` putting `theta_n` outside the family's validity
/// range) carry an error marker instead of aborting the table.
pub fn power_curve(cfg: &ExperimentConfig) -> Result<Vec<PowerCell>> {
    cfg.validate()?;
    let side = cfg.test_side();
    let xis = cfg.xi_grid();
    let tests = cfg.test_list();
    let mut cells = Vec::with_capacity(xis.len() * tests.len());
    for &xi in &xis {
        for &test in &tests {
            let mut local = cfg.clone();
            local.xi = xi;
            match estimate_rejection_rate(&local, test, side) {
                Ok(summary) => cells.push(PowerCell {
                    xi,
                    test,
                    side,
                    summary: Some(summary),
                    error: None,
                }),
                Err(e) => cells.push(PowerCell {
                    xi,
                    test,
                    side,
                    summary: None,
                    error: Some(e.to_string()),
                }),
            }
        }
    }
    Ok(cells)
}
