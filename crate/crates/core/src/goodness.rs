//! Goodness-of-fit distances and proportion confidence intervals used by
//! the Monte Carlo harness.

use crate::error::{Error, Result};

/// Coefficient of the asymptotic Kolmogorov–Smirnov critical value at the
/// 1% level: `D_crit = 1.63 / sqrt(n)` for one sample and
/// `1.63 * sqrt((n + m) / (n m))` for two samples.
pub const KS_CRITICAL_1PCT_COEFF: f64 = 1.63;

/// Standard normal quantile at 0.995, used for 99% Wilson intervals.
pub const WILSON_99_Z: f64 = 2.575_829_303_548_900_4;

/// One-sample Kolmogorov–Smirnov distance between a sample and a reference
/// distribution function.  Sorts an internal copy of the sample.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Evaluation(
            "Kolmogorov-Smirnov distance needs a nonempty sample".into(),
        ));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::Evaluation(
            "Kolmogorov-Smirnov distance is undefined for NaN values".into(),
        ));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov distance (maximum gap between the two
/// empirical distribution functions).
pub fn ks_two_sample(first: &[f64], second: &[f64]) -> Result<f64> {
    if first.is_empty() || second.is_empty() {
        return Err(Error::Evaluation(
            "two-sample Kolmogorov-Smirnov distance needs two nonempty samples".into(),
        ));
    }
    if first.iter().chain(second).any(|x| x.is_nan()) {
        return Err(Error::Evaluation(
            "Kolmogorov-Smirnov distance is undefined for NaN values".into(),
        ));
    }
    let mut a = first.to_vec();
    let mut b = second.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Advance past ties on both sides before comparing ECDF heights.
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic 1% one-sample critical value `1.63 / sqrt(n)`.
pub fn ks_critical_1pct(n: usize) -> f64 {
    KS_CRITICAL_1PCT_COEFF / (n as f64).sqrt()
}

/// Asymptotic 1% two-sample critical value `1.63 sqrt((n + m)/(n m))`.
pub fn ks_two_sample_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_CRITICAL_1PCT_COEFF * ((n + m) / (n * m)).sqrt()
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
/// Returns `(low, high)` with `low <= successes/trials <= high`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::Evaluation(format!(
            "Wilson interval needs 0 <= successes <= trials >= 1; \
             got {successes}/{trials}"
        )));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Evaluation(format!(
            "Wilson interval needs a positive finite quantile; got {z}"
        )));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2n = z * z / n;
    let center = (p + 0.5 * z2n) / (1.0 + z2n);
    let half = z / (1.0 + z2n) * (p * (1.0 - p) / n + 0.25 * z2n / n).sqrt();
    // Clamp to [0, 1] and force the bracket to contain the point estimate
    // (rounding can push a degenerate endpoint one ulp past it).
    Ok((
        (center - half).max(0.0).min(p),
        (center + half).min(1.0).max(p),
    ))
}
