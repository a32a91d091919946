//! Closed-form asymptotic predictions.
//!
//! Everything here is a pure formula — no simulation.  The Monte Carlo
//! harness estimates the same quantities empirically and compares against
//! these predictions, so keeping the two sides separate gives the
//! acceptance tests a clean oracle/subject split.
//!
//! For the delta family with local alternatives
//! `theta_n = xi / sqrt(n |c_n|^{1+2 delta})`, the limiting experiment is a
//! Gaussian shift whose drift is `xi B / (sqrt(A) sqrt(2 delta + 1))` for
//! the optimal test and `xi (B / sqrt(A)) psi(delta)` for the omnibus test,
//! where `A = E(inf Z)`, `B = E (inf Z)^{1+delta}`, and
//! `psi(delta) = ∫ x Φ(x)^delta φ(x) dx`.  For exponential families with
//! `theta_n = xi / (sqrt(n |c_n| A) (T(0+) - ∫T))` the optimal drift is
//! `xi` and the omnibus drift vanishes — value-based tests are blind there.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::special::{psi, std_normal_cdf, std_normal_quantile, QuadratureSettings};
use crate::teststats::TestSide;

/// Parameters of the normal limit of the log-likelihood ratio under the
/// null and under contiguous alternatives.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LanParams {
    /// Limit variance of the log-likelihood ratio.
    pub sigma2: f64,
    /// Limit mean under the null: `-sigma2 / 2`.
    pub mean_h0: f64,
    /// Limit mean under the local alternative: `+sigma2 / 2`.
    pub mean_h1: f64,
}

impl LanParams {
    fn from_sigma2(sigma2: f64) -> Self {
        Self {
            sigma2,
            mean_h0: -0.5 * sigma2,
            mean_h1: 0.5 * sigma2,
        }
    }

    /// A zero-variance limit (local parameter 0): the experiment carries no
    /// information and empirical checks should be skipped.
    pub fn is_degenerate(&self) -> bool {
        self.sigma2 == 0.0
    }
}

/// Local alternative for the delta family:
/// `theta_n = xi / sqrt(n |c|^{1 + 2 delta})`.
pub fn theta_n_delta(xi: f64, n: usize, c: f64, delta: f64) -> Result<f64> {
    if n == 0 || !(c.is_finite() && c < 0.0) {
        return Err(Error::InvalidConfig(format!(
            "local alternatives need n >= 1 and a negative threshold; got n = {n}, c = {c}"
        )));
    }
    Ok(xi / (n as f64 * c.abs().powf(1.0 + 2.0 * delta)).sqrt())
}

/// Local alternative for exponential families:
/// `theta_n = xi / (sqrt(n |c| A) (t_limit - t_integral))`, where
/// `t_limit = lim_{u->0} T(u)` and `t_integral = ∫₀¹ T`.
pub fn theta_n_expfam(
    xi: f64,
    n: usize,
    c: f64,
    inf_mean: f64,
    t_limit: f64,
    t_integral: f64,
) -> Result<f64> {
    if n == 0 || !(c.is_finite() && c < 0.0) {
        return Err(Error::InvalidConfig(format!(
            "local alternatives need n >= 1 and a negative threshold; got n = {n}, c = {c}"
        )));
    }
    if !(inf_mean.is_finite() && inf_mean > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "the infimum mean must be positive; got {inf_mean}"
        )));
    }
    let gap = t_limit - t_integral;
    if gap.abs() <= 1e-9 {
        return Err(Error::InvalidModel(
            "the statistic's limit at 0 must differ from its integral; \
             the local reparametrization is degenerate"
                .into(),
        ));
    }
    Ok(xi / ((n as f64 * c.abs() * inf_mean).sqrt() * gap))
}

/// Memoized `psi(delta)` at the default quadrature settings.
pub fn psi_cached(delta: f64) -> Result<f64> {
    static MEMO: OnceLock<RwLock<HashMap<u64, f64>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| RwLock::new(HashMap::new()));
    let key = delta.to_bits();
    if let Some(&v) = memo.read().expect("psi memo poisoned").get(&key) {
        return Ok(v);
    }
    let v = psi(delta, &QuadratureSettings::default())?;
    memo.write().expect("psi memo poisoned").insert(key, v);
    Ok(v)
}

/// Rejection probability of a one-sided level-`alpha` test whose statistic
/// is asymptotically `N(drift, 1)`.
pub fn power_prediction(drift: f64, alpha: f64, side: TestSide) -> Result<f64> {
    if !(alpha.is_finite() && 0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test level must lie in (0, 1); got {alpha}"
        )));
    }
    if drift == 0.0 {
        // 1 - Φ(u_α) is α by definition; skip the quantile/cdf round trip
        // so null predictions are exact.
        return Ok(alpha);
    }
    let u_alpha = std_normal_quantile(1.0 - alpha)?;
    Ok(match side {
        TestSide::Upper => 1.0 - std_normal_cdf(u_alpha - drift),
        TestSide::Lower => std_normal_cdf(-u_alpha - drift),
    })
}

/// Signed limit drift of the optimal delta-family test statistic.
pub fn drift_optimal_delta(xi: f64, inf_mean: f64, inf_moment: f64, delta: f64) -> f64 {
    xi * inf_moment / (inf_mean.sqrt() * (2.0 * delta + 1.0).sqrt())
}

/// Signed limit drift of the omnibus statistic under delta-family local
/// alternatives.
pub fn drift_omnibus_delta(xi: f64, inf_mean: f64, inf_moment: f64, delta: f64) -> Result<f64> {
    Ok(xi * inf_moment / inf_mean.sqrt() * psi_cached(delta)?)
}

/// Asymptotic power of the optimal delta-family test (upper side, drift
/// taken at `|xi|`): `1 - Φ(u_α - |xi| B / (sqrt(A) sqrt(2δ+1)))`.
pub fn power_optimal_delta(
    xi: f64,
    inf_mean: f64,
    inf_moment: f64,
    delta: f64,
    alpha: f64,
) -> Result<f64> {
    check_moments(inf_mean, inf_moment)?;
    power_prediction(
        drift_optimal_delta(xi.abs(), inf_mean, inf_moment, delta),
        alpha,
        TestSide::Upper,
    )
}

/// Asymptotic power of the omnibus test under delta-family alternatives:
/// `1 - Φ(u_α - |xi| (B/sqrt(A)) psi(δ))`.
pub fn power_omnibus_delta(
    xi: f64,
    inf_mean: f64,
    inf_moment: f64,
    delta: f64,
    alpha: f64,
) -> Result<f64> {
    check_moments(inf_mean, inf_moment)?;
    power_prediction(
        drift_omnibus_delta(xi.abs(), inf_mean, inf_moment, delta)?,
        alpha,
        TestSide::Upper,
    )
}

/// Asymptotic power of the optimal exponential-family test:
/// `1 - Φ(u_α - |xi|)`.
pub fn power_optimal_expfam(xi: f64, alpha: f64) -> Result<f64> {
    power_prediction(xi.abs(), alpha, TestSide::Upper)
}

fn check_moments(inf_mean: f64, inf_moment: f64) -> Result<()> {
    if !(inf_mean > 0.0 && inf_moment > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "infimum moments must be positive; got mean {inf_mean}, \
             moment {inf_moment}"
        )));
    }
    Ok(())
}

/// Asymptotic relative efficiency of the omnibus test against the optimal
/// delta-family test: `(2δ+1) psi(δ)²`, the squared ratio of their drifts.
pub fn are_delta(delta: f64) -> Result<f64> {
    let p = psi_cached(delta)?;
    Ok((2.0 * delta + 1.0) * p * p)
}

/// LAN limit for the delta family: `sigma2 = xi² B² / (A (2δ+1))`.
pub fn lan_params_delta(xi: f64, inf_mean: f64, inf_moment: f64, delta: f64) -> Result<LanParams> {
    check_moments(inf_mean, inf_moment)?;
    let sigma2 = xi * xi * inf_moment * inf_moment / (inf_mean * (2.0 * delta + 1.0));
    Ok(LanParams::from_sigma2(sigma2))
}

/// LAN limit for exponential families: `sigma2 = xi²`.
pub fn lan_params_expfam(xi: f64) -> LanParams {
    LanParams::from_sigma2(xi * xi)
}
