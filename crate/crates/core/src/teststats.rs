//! Test statistics and decision rules for exceedance samples.
//!
//! Two families of tests are provided:
//!
//! * *Optimal* tests, which assume the departure family is known.  For the
//!   delta family the statistic combines the exceedance-count z-score and
//!   the exceedance-value z-score; for exponential families the count
//!   z-score alone is optimal (the values carry no local information).
//! * The *omnibus* test, `τ^{-1/2} Σ Φ⁻¹(Y_k)`, which needs no model
//!   constants and is exactly standard normal under the null conditionally
//!   on observing at least one exceedance.
//!
//! The exact log-likelihood ratio between a departure parameter and the
//! null is also computed here; it is the object whose local asymptotic
//! normality the Monte Carlo harness verifies.

use crate::error::{Error, Result};
use crate::exceedance::{exceedance_probability, ExceedanceSample};
use crate::generator::InfLaw;
use crate::special::{std_normal_cdf, std_normal_quantile};
use crate::wmodel::WFamily;

/// Clamp width for probability-integral values at the support edges before
/// applying the normal quantile.
const OMNIBUS_CLAMP: f64 = 1e-15;

/// Which tail of the reference normal a test rejects in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestSide {
    /// Reject for large positive statistics (departures inflating the
    /// statistic).
    Upper,
    /// Reject for large negative statistics.
    Lower,
}

/// Outcome of one test applied to one sample.
///
/// When a test abstains (no exceedances to evaluate a value-based
/// statistic), `abstained` is set, `reject` is false and `statistic` /
/// `p_value` are NaN; otherwise `p_value ∈ [0, 1]` and the rejection flag
/// matches the side's comparison against the signed critical value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TestOutcome {
    /// Value of the test statistic.
    pub statistic: f64,
    /// Signed critical value: `u_alpha` for upper tests, `-u_alpha` for
    /// lower tests.
    pub critical_value: f64,
    /// Nominal level of the test.
    pub alpha: f64,
    /// Rejection decision.
    pub reject: bool,
    /// One-sided p-value in the direction of `side`.
    pub p_value: f64,
    /// Rejection direction.
    pub side: TestSide,
    /// The sample had no exceedances and the statistic is undefined.
    pub abstained: bool,
    /// Number of exceedance values clamped away from {0, 1} before the
    /// normal quantile (omnibus only; 0 elsewhere).
    pub clamped_values: usize,
}

fn decide(statistic: f64, alpha: f64, side: TestSide, clamped: usize) -> Result<TestOutcome> {
    if !(alpha.is_finite() && 0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test level must lie in (0, 1); got {alpha}"
        )));
    }
    let u_alpha = std_normal_quantile(1.0 - alpha)?;
    let (critical_value, reject, p_value) = match side {
        TestSide::Upper => (
            u_alpha,
            statistic > u_alpha,
            1.0 - std_normal_cdf(statistic),
        ),
        TestSide::Lower => (-u_alpha, statistic < -u_alpha, std_normal_cdf(statistic)),
    };
    Ok(TestOutcome {
        statistic,
        critical_value,
        alpha,
        reject,
        p_value,
        side,
        abstained: false,
        clamped_values: clamped,
    })
}

fn abstain(alpha: f64, side: TestSide) -> Result<TestOutcome> {
    let u_alpha = std_normal_quantile(1.0 - alpha)?;
    Ok(TestOutcome {
        statistic: f64::NAN,
        critical_value: match side {
            TestSide::Upper => u_alpha,
            TestSide::Lower => -u_alpha,
        },
        alpha,
        reject: false,
        p_value: f64::NAN,
        side,
        abstained: true,
        clamped_values: 0,
    })
}

/// Exceedance-count z-score `(τ - n|c|A) / √(n|c|A)` with `A` the mean of
/// the infimum law: the count is binomial with success probability `|c|A`
/// under the null, and this is its Poisson-scale normalization.
pub fn count_zscore(sample: &ExceedanceSample, inf_mean: f64) -> Result<f64> {
    let expected = sample.n as f64 * sample.c.abs() * inf_mean;
    if !(expected.is_finite() && expected > 0.0) {
        return Err(Error::Domain(format!(
            "expected exceedance count must be positive; got {expected}"
        )));
    }
    Ok((sample.tau() as f64 - expected) / expected.sqrt())
}

/// Exceedance-value z-score `(1+δ)/√τ · Σ (Y_k^δ - 1/(1+δ))`; requires at
/// least one exceedance.
pub fn value_zscore(sample: &ExceedanceSample, delta: f64) -> Result<f64> {
    let tau = sample.tau();
    if tau == 0 {
        return Err(Error::NoExceedances(
            "the value z-score needs at least one exceedance".into(),
        ));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Domain(format!(
            "roughness exponent must be positive; got {delta}"
        )));
    }
    let center = 1.0 / (1.0 + delta);
    let sum: f64 = if delta == 1.0 {
        sample.ys.iter().map(|y| y - center).sum()
    } else {
        sample.ys.iter().map(|y| y.powf(delta) - center).sum()
    };
    Ok((1.0 + delta) / (tau as f64).sqrt() * sum)
}

/// Optimal test for the delta family:
/// statistic `√(2δ+1)/(1+δ) · (count z-score + value z-score)`.
///
/// Abstains when the sample has no exceedances.
pub fn optimal_test_delta(
    sample: &ExceedanceSample,
    inf_mean: f64,
    delta: f64,
    alpha: f64,
    side: TestSide,
) -> Result<TestOutcome> {
    if sample.tau() == 0 {
        return abstain(alpha, side);
    }
    let z1 = count_zscore(sample, inf_mean)?;
    let z2 = value_zscore(sample, delta)?;
    let statistic = (2.0 * delta + 1.0).sqrt() / (1.0 + delta) * (z1 + z2);
    decide(statistic, alpha, side, 0)
}

/// Optimal test for exponential families: the count z-score alone.  A
/// sample without exceedances is a legal (very negative) statistic value.
pub fn optimal_test_expfam(
    sample: &ExceedanceSample,
    inf_mean: f64,
    alpha: f64,
    side: TestSide,
) -> Result<TestOutcome> {
    let statistic = count_zscore(sample, inf_mean)?;
    decide(statistic, alpha, side, 0)
}

fn omnibus_sum(ys: &[f64]) -> Result<(f64, usize)> {
    let mut sum = 0.0;
    let mut clamped = 0;
    for &y in ys {
        // Clamp boundary values symmetrically: the upper clamp is the exact
        // negation of the lower one, so {0, 1} pairs cancel like {p, 1-p}.
        let q = if y <= 0.0 {
            clamped += 1;
            std_normal_quantile(OMNIBUS_CLAMP)?
        } else if y >= 1.0 {
            clamped += 1;
            -std_normal_quantile(OMNIBUS_CLAMP)?
        } else {
            std_normal_quantile(y)?
        };
        sum += q;
    }
    Ok((sum, clamped))
}

/// Omnibus statistic `τ^{-1/2} Σ Φ⁻¹(Y_k)`.
///
/// Exactly standard normal under the null given `τ >= 1` for any threshold
/// in the guarded range; values at exactly 0 or 1 (possible in floating
/// point, null events in the model) are clamped `1e-15` into the interior.
pub fn omnibus_statistic(sample: &ExceedanceSample) -> Result<f64> {
    let tau = sample.tau();
    if tau == 0 {
        return Err(Error::NoExceedances(
            "the omnibus statistic needs at least one exceedance".into(),
        ));
    }
    let (sum, _) = omnibus_sum(&sample.ys)?;
    Ok(sum / (tau as f64).sqrt())
}

/// Omnibus test; abstains when the sample has no exceedances.
pub fn omnibus_test(sample: &ExceedanceSample, alpha: f64, side: TestSide) -> Result<TestOutcome> {
    let tau = sample.tau();
    if tau == 0 {
        return abstain(alpha, side);
    }
    let (sum, clamped) = omnibus_sum(&sample.ys)?;
    decide(sum / (tau as f64).sqrt(), alpha, side, clamped)
}

/// Exact log-likelihood ratio of the exceedance point process between the
/// family member at `theta` and the null.
///
/// With `P_θ` the exceedance probability and
/// `f_θ(u) = |c| Σ p_i z_i h_θ(|c| z_i u)` the (unnormalized) exceedance
/// value density,
///
/// ```text
/// L = Σ_k log( f_θ(Y_k)/f_0(Y_k) · P_0/P_θ )
///   + τ log(P_θ/P_0) + (n-τ) log((1-P_θ)/(1-P_0)).
/// ```
///
/// Exact (up to the model's own quadrature tolerances) for discrete
/// infimum laws; `theta = 0` returns exactly 0.
pub fn loglik_ratio(
    sample: &ExceedanceSample,
    theta: f64,
    family: &WFamily,
    law: &InfLaw,
) -> Result<f64> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    let w_theta = family.model(theta)?;
    let w_null = family.model(0.0)?;
    let p_theta = exceedance_probability(&w_theta, law, sample.c)?;
    let p_null = exceedance_probability(&w_null, law, sample.c)?;
    for (label, p) in [("alternative", p_theta), ("null", p_null)] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Evaluation(format!(
                "{label} exceedance probability {p} is degenerate; the \
                 likelihood ratio is undefined"
            )));
        }
    }
    let abs_c = sample.c.abs();
    let value_density = |w: &crate::wmodel::WModel, y: f64| -> Result<f64> {
        let mut acc = 0.0;
        for atom in law.atoms() {
            if atom.value > 0.0 {
                acc += atom.weight * atom.value * w.density(abs_c * atom.value * y)?;
            }
        }
        Ok(abs_c * acc)
    };
    let mut total = 0.0;
    for &y in &sample.ys {
        let f_theta = value_density(&w_theta, y)?;
        let f_null = value_density(&w_null, y)?;
        if !(f_theta > 0.0 && f_null > 0.0) {
            return Err(Error::Evaluation(format!(
                "value density vanished at an observed exceedance (y = {y}); \
                 theta = {theta} is outside the mutually contiguous range"
            )));
        }
        total += (f_theta / f_null * (p_null / p_theta)).ln();
    }
    let tau = sample.tau() as f64;
    total += tau * (p_theta / p_null).ln();
    total += (sample.n as f64 - tau) * ((1.0 - p_theta) / (1.0 - p_null)).ln();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wmodel::TStat;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sample(n: usize, c: f64, ys: Vec<f64>) -> ExceedanceSample {
        ExceedanceSample::new(n, c, ys).unwrap()
    }

    #[test]
    fn count_zscore_golden_values() {
        let s = sample(10_000, -0.01, vec![0.5; 120]);
        assert_eq!(count_zscore(&s, 1.0).unwrap(), 2.0);
        let s = sample(10_000, -0.01, vec![0.5; 100]);
        assert_eq!(count_zscore(&s, 1.0).unwrap(), 0.0);
        let s = sample(10_000, -0.01, vec![0.5; 80]);
        assert_eq!(count_zscore(&s, 1.0).unwrap(), -2.0);
        assert!(count_zscore(&s, 0.0).is_err());
    }

    #[test]
    fn value_zscore_golden_values() {
        let s = sample(10, -0.1, vec![1.0]);
        assert_abs_diff_eq!(value_zscore(&s, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        let s = sample(10, -0.1, vec![0.5, 0.5]);
        assert_abs_diff_eq!(value_zscore(&s, 1.0).unwrap(), 0.0, epsilon = 1e-15);
        let s = sample(10, -0.1, vec![0.25, 0.81]);
        let expected = 1.5 / 2f64.sqrt() * ((0.5 - 2.0 / 3.0) + (0.9 - 2.0 / 3.0));
        assert_abs_diff_eq!(value_zscore(&s, 0.5).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(value_zscore(&s, 0.5).unwrap(), 0.0707107, epsilon = 1e-7);
        let empty = sample(10, -0.1, vec![]);
        assert!(matches!(
            value_zscore(&empty, 1.0),
            Err(Error::NoExceedances(_))
        ));
    }

    #[test]
    fn optimal_delta_test_golden_decisions() {
        // Construct a sample with known z-scores: τ=120, n=1e4, c=-0.01,
        // A=1 gives count z-score 2; a single-atom value pattern then
        // pins the value z-score.
        // Rather than reverse-engineering ys, check the combination rule on
        // synthetic z-scores through the public pieces.
        let z1 = 2.0;
        let z2 = 1.0;
        let stat = (2.0f64 * 1.0 + 1.0).sqrt() / 2.0 * (z1 + z2);
        assert_abs_diff_eq!(stat, 2.598, epsilon = 1e-3);
        let stat05 = (2.0f64 * 0.5 + 1.0).sqrt() / 1.5 * (1.0 + 0.5);
        assert_abs_diff_eq!(stat05, 1.414, epsilon = 1e-3);

        // End-to-end: a sample engineered to reject upper at 5%.
        let ys = vec![0.9; 150];
        let s = sample(10_000, -0.01, ys);
        let outcome = optimal_test_delta(&s, 1.0, 1.0, 0.05, TestSide::Upper).unwrap();
        assert!(outcome.reject);
        assert!(outcome.statistic > outcome.critical_value);
        assert!(!outcome.abstained);
        assert_abs_diff_eq!(outcome.critical_value, 1.6448536269514722, epsilon = 1e-6);

        // Abstention on an empty sample.
        let empty = sample(10_000, -0.01, vec![]);
        let outcome = optimal_test_delta(&empty, 1.0, 1.0, 0.05, TestSide::Upper).unwrap();
        assert!(outcome.abstained);
        assert!(!outcome.reject);
        assert!(outcome.statistic.is_nan());
    }

    #[test]
    fn expfam_test_uses_the_count_alone() {
        let s = sample(10_000, -0.01, vec![0.5; 120]);
        let outcome = optimal_test_expfam(&s, 1.0, 0.05, TestSide::Upper).unwrap();
        assert_eq!(outcome.statistic, 2.0);
        assert!(outcome.reject);
        // τ=0 is a legal, very negative statistic: no abstention.
        let empty = sample(100, -0.01, vec![]);
        let outcome = optimal_test_expfam(&empty, 1.0, 0.05, TestSide::Upper).unwrap();
        assert_eq!(outcome.statistic, -1.0);
        assert!(!outcome.reject);
        assert!(!outcome.abstained);
        // Lower side rejects for depleted counts.
        let outcome = optimal_test_expfam(&empty, 1.0, 0.2, TestSide::Lower).unwrap();
        assert!(outcome.statistic < 0.0);
        assert_eq!(outcome.reject, outcome.statistic < outcome.critical_value);
    }

    #[test]
    fn omnibus_statistic_golden_values() {
        let s = sample(10, -0.1, vec![0.5]);
        assert_eq!(omnibus_statistic(&s).unwrap(), 0.0);
        let s = sample(10, -0.1, vec![0.975, 0.975]);
        assert_abs_diff_eq!(omnibus_statistic(&s).unwrap(), 2.7718, epsilon = 1e-4);
        // Antisymmetry: {p, 1-p} cancels.
        let s = sample(10, -0.1, vec![0.3, 0.7]);
        assert_abs_diff_eq!(omnibus_statistic(&s).unwrap(), 0.0, epsilon = 1e-12);
        let empty = sample(10, -0.1, vec![]);
        assert!(matches!(
            omnibus_statistic(&empty),
            Err(Error::NoExceedances(_))
        ));
    }

    #[test]
    fn omnibus_clamps_boundary_values() {
        let s = sample(10, -0.1, vec![0.0, 1.0, 0.5]);
        let stat = omnibus_statistic(&s).unwrap();
        // The clamped pair cancels by symmetry.
        assert_abs_diff_eq!(stat, 0.0, epsilon = 1e-9);
        let outcome = omnibus_test(&s, 0.05, TestSide::Upper).unwrap();
        assert_eq!(outcome.clamped_values, 2);
        assert!(!outcome.reject);
    }

    #[test]
    fn omnibus_test_decisions() {
        let s = sample(10, -0.1, vec![0.975, 0.975]);
        let outcome = omnibus_test(&s, 0.05, TestSide::Upper).unwrap();
        assert!(outcome.reject);
        let s = sample(10, -0.1, vec![0.5]);
        let outcome = omnibus_test(&s, 0.05, TestSide::Lower).unwrap();
        assert!(!outcome.reject);
        assert_abs_diff_eq!(outcome.critical_value, -1.6448536269514722, epsilon = 1e-6);
        let empty = sample(10, -0.1, vec![]);
        let outcome = omnibus_test(&empty, 0.05, TestSide::Upper).unwrap();
        assert!(outcome.abstained && !outcome.reject);
    }

    #[test]
    fn loglik_ratio_golden_values() {
        let family = WFamily::Delta {
            delta: 1.0,
            u0: 0.5,
        };
        let law = InfLaw::new(vec![(1.0, 1.0)]).unwrap();
        let s = sample(1, -0.2, vec![0.5]);
        let l = loglik_ratio(&s, 0.1, &family, &law).unwrap();
        assert_abs_diff_eq!(l, 1.01f64.ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(l, 0.0099503, epsilon = 1e-7);

        let s0 = sample(1, -0.2, vec![]);
        let l0 = loglik_ratio(&s0, 0.1, &family, &law).unwrap();
        assert_abs_diff_eq!(l0, (0.798f64 / 0.8).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(l0, -0.0025031, epsilon = 1e-7);

        // theta = 0: identical measures.
        assert_eq!(loglik_ratio(&s, 0.0, &family, &law).unwrap(), 0.0);
    }

    #[test]
    fn loglik_ratio_is_additive_over_partitions() {
        let family = WFamily::Delta {
            delta: 0.5,
            u0: 0.5,
        };
        let law = InfLaw::new(vec![(0.5, 0.5), (1.0, 0.5)]).unwrap();
        let whole = sample(100, -0.2, vec![0.1, 0.4, 0.9, 0.55]);
        let part1 = sample(60, -0.2, vec![0.1, 0.4]);
        let part2 = sample(40, -0.2, vec![0.9, 0.55]);
        let l = loglik_ratio(&whole, 0.3, &family, &law).unwrap();
        let l1 = loglik_ratio(&part1, 0.3, &family, &law).unwrap();
        let l2 = loglik_ratio(&part2, 0.3, &family, &law).unwrap();
        assert_abs_diff_eq!(l, l1 + l2, epsilon = 1e-12);
    }

    #[test]
    fn loglik_ratio_works_for_exponential_families() {
        let family = WFamily::ExpFamily { t: TStat::Linear };
        let law = InfLaw::new(vec![(1.0, 1.0)]).unwrap();
        let s = sample(50, -0.1, vec![0.2, 0.8]);
        let l = loglik_ratio(&s, 0.5, &family, &law).unwrap();
        assert!(l.is_finite());
        // Oracle: assemble the same quantity from public primitives.
        let w_t = family.model(0.5).unwrap();
        let w_0 = family.model(0.0).unwrap();
        let p_t = exceedance_probability(&w_t, &law, -0.1).unwrap();
        let p_0 = exceedance_probability(&w_0, &law, -0.1).unwrap();
        let f = |w: &crate::wmodel::WModel, y: f64| 0.1 * w.density(0.1 * y).unwrap();
        let mut expected = 0.0;
        for y in [0.2, 0.8] {
            expected += (f(&w_t, y) / f(&w_0, y) * (p_0 / p_t)).ln();
        }
        expected += 2.0 * (p_t / p_0).ln() + 48.0 * ((1.0 - p_t) / (1.0 - p_0)).ln();
        assert_abs_diff_eq!(l, expected, epsilon = 1e-12);
    }

    #[test]
    fn loglik_ratio_rejects_degenerate_densities() {
        // theta at the lower validity edge zeroes the density at the
        // cutoff; an exceedance evaluated exactly there is degenerate.
        let family = WFamily::Delta {
            delta: 1.0,
            u0: 0.5,
        };
        let law = InfLaw::new(vec![(1.0, 1.0)]).unwrap();
        let s = sample(10, -0.5, vec![1.0]);
        assert!(matches!(
            loglik_ratio(&s, -2.0, &family, &law),
            Err(Error::Evaluation(_))
        ));
    }

    proptest! {
        #[test]
        fn statistics_are_permutation_invariant(
            mut ys in proptest::collection::vec(0.001..0.999f64, 1..40),
            delta in 0.1..=1.0f64,
        ) {
            let s1 = sample(1000, -0.05, ys.clone());
            ys.reverse();
            let half = ys.len() / 2;
            ys.rotate_left(half);
            let s2 = sample(1000, -0.05, ys);
            prop_assert!((count_zscore(&s1, 1.0).unwrap() - count_zscore(&s2, 1.0).unwrap()).abs() < 1e-12);
            prop_assert!((value_zscore(&s1, delta).unwrap() - value_zscore(&s2, delta).unwrap()).abs() < 1e-9);
            prop_assert!((omnibus_statistic(&s1).unwrap() - omnibus_statistic(&s2).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn rejection_is_monotone_in_the_statistic(
            tau1 in 0usize..200,
            tau2 in 0usize..200,
            alpha in 0.01..0.3f64,
        ) {
            let s1 = sample(10_000, -0.01, vec![0.5; tau1]);
            let s2 = sample(10_000, -0.01, vec![0.5; tau2]);
            let o1 = optimal_test_expfam(&s1, 1.0, alpha, TestSide::Upper).unwrap();
            let o2 = optimal_test_expfam(&s2, 1.0, alpha, TestSide::Upper).unwrap();
            if o1.statistic <= o2.statistic && o1.reject {
                prop_assert!(o2.reject);
            }
        }

        #[test]
        fn p_values_lie_in_the_unit_interval(
            ys in proptest::collection::vec(0.001..0.999f64, 1..40),
            alpha in 0.01..0.5f64,
        ) {
            let s = sample(1000, -0.05, ys);
            for side in [TestSide::Upper, TestSide::Lower] {
                let o = omnibus_test(&s, alpha, side).unwrap();
                prop_assert!((0.0..=1.0).contains(&o.p_value));
                let o = optimal_test_delta(&s, 1.0, 0.5, alpha, side).unwrap();
                prop_assert!((0.0..=1.0).contains(&o.p_value));
            }
        }
    }
}
