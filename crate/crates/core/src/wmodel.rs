//! Parametric models for the radial variable `W`.
//!
//! The null hypothesis is `W ~ uniform(0, 1)`.  Two parametric departure
//! families are built in, each indexed by a real `theta` with `theta = 0`
//! recovering the null on the region that matters for exceedances:
//!
//! * [`DeltaModel`] — densities behaving like `1 + theta * u^delta` near 0.
//!   The defining property only constrains the lower tail, so this crate
//!   realizes the family as exactly `1 + theta * u^delta` on `[0, u0]` with
//!   a constant-density tail on `(u0, 1]` absorbing the remaining mass.
//!   Below the cutoff all identities are closed-form.
//! * [`ExpFamilyModel`] — exponential families `C(theta) * exp(theta T(u))`
//!   for a bounded statistic `T` with a finite limit at 0.
//!
//! The standard exponential distribution is included as the classical
//! example of a delta-type departure (`delta = 1`, `theta = -1`).

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Number of equal cells in the cached exponential-family cdf table.
const EXPFAM_CDF_CELLS: usize = 4096;

/// Safeguarded Newton inversion of a strictly increasing cdf on a bracket.
///
/// Newton steps that leave the bracket fall back to bisection; converges to
/// `1e-13` in the argument (tighter than the documented 1e-12 guarantee).
fn invert_increasing(
    cdf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
    p: f64,
    mut lo: f64,
    mut hi: f64,
    start: f64,
) -> f64 {
    let mut x = start.clamp(lo, hi);
    for _ in 0..200 {
        let fx = cdf(x) - p;
        if fx.abs() <= 1e-15 || hi - lo <= 1e-13 {
            break;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = pdf(x);
        let newton = x - fx / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

// --- Delta family -----------------------------------------------------------

/// Density `1 + theta * u^delta` on `[0, u0]` with a constant tail on
/// `(u0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaModel {
    delta: f64,
    theta: f64,
    u0: f64,
    /// Constant tail density on `(u0, 1]`.
    tail: f64,
}

impl DeltaModel {
    /// Default lower-tail cutoff `u0`.
    pub const DEFAULT_CUTOFF: f64 = 0.5;

    /// Build a model with roughness `delta ∈ (0, 1]`, departure `theta`
    /// inside [`theta_range`](Self::theta_range), and cutoff `u0 ∈ (0, 1)`.
    pub fn new(delta: f64, theta: f64, u0: f64) -> Result<Self> {
        let (lo, hi) = Self::theta_range(delta, u0)?;
        if !theta.is_finite() || theta < lo || theta > hi {
            return Err(Error::InvalidModel(format!(
                "theta = {theta} leaves the density nonnegative only for \
                 theta in [{lo}, {hi}] at delta = {delta}, u0 = {u0}"
            )));
        }
        let tail = (1.0 - u0 - theta * u0.powf(1.0 + delta) / (1.0 + delta)) / (1.0 - u0);
        Ok(Self {
            delta,
            theta,
            u0,
            tail: tail.max(0.0),
        })
    }

    /// Model with the default cutoff.
    pub fn with_default_cutoff(delta: f64, theta: f64) -> Result<Self> {
        Self::new(delta, theta, Self::DEFAULT_CUTOFF)
    }

    /// Exact interval of `theta` keeping the density nonnegative on all of
    /// `[0, 1]`: the lower end keeps `1 + theta * u^delta >= 0` on
    /// `[0, u0]`, the upper end keeps the constant tail nonnegative.
    pub fn theta_range(delta: f64, u0: f64) -> Result<(f64, f64)> {
        if !delta.is_finite() || delta <= 0.0 || delta > 1.0 {
            return Err(Error::InvalidModel(format!(
                "roughness exponent must lie in (0, 1]; got {delta}"
            )));
        }
        if !u0.is_finite() || u0 <= 0.0 || u0 >= 1.0 {
            return Err(Error::InvalidModel(format!(
                "lower-tail cutoff must lie in (0, 1); got {u0}"
            )));
        }
        let lo = -u0.powf(-delta);
        let hi = (1.0 - u0) * (1.0 + delta) / u0.powf(1.0 + delta);
        Ok((lo, hi))
    }

    /// Roughness exponent `delta`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Departure parameter `theta`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Lower-tail cutoff `u0`; the closed-form expansion holds below it.
    pub fn cutoff(&self) -> f64 {
        self.u0
    }

    fn density(&self, u: f64) -> f64 {
        if u <= self.u0 {
            1.0 + self.theta * u.powf(self.delta)
        } else {
            self.tail
        }
    }

    fn cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        if u <= self.u0 {
            u + self.theta * u.powf(1.0 + self.delta) / (1.0 + self.delta)
        } else {
            (self.cdf_at_cutoff() + self.tail * (u - self.u0)).min(1.0)
        }
    }

    fn cdf_at_cutoff(&self) -> f64 {
        self.u0 + self.theta * self.u0.powf(1.0 + self.delta) / (1.0 + self.delta)
    }

    fn quantile(&self, p: f64) -> f64 {
        let p_cut = self.cdf_at_cutoff();
        if p <= p_cut {
            if self.theta == 0.0 {
                return p;
            }
            if self.delta == 1.0 {
                // theta/2 u^2 + u - p = 0, stable positive root.
                return 2.0 * p / (1.0 + (1.0 + 2.0 * self.theta * p).max(0.0).sqrt());
            }
            invert_increasing(
                |u| u + self.theta * u.powf(1.0 + self.delta) / (1.0 + self.delta),
                |u| 1.0 + self.theta * u.powf(self.delta),
                p,
                0.0,
                self.u0,
                p.min(self.u0),
            )
        } else {
            // Constant tail: linear cdf segment.
            (self.u0 + (p - p_cut) / self.tail).min(1.0)
        }
    }
}

// --- Exponential family ------------------------------------------------------

/// Statistic `T` of the exponential family `C(theta) exp(theta T(u))`.
#[derive(Debug, Clone, PartialEq)]
pub enum TStat {
    /// `T(u) = u`.
    Linear,
    /// `T(u) = min(u, tau)` for a plateau point `tau ∈ (0, 1)`.
    Plateau { tau: f64 },
    /// Piecewise-linear interpolation of `(u, T(u))` nodes spanning
    /// `[0, 1]` with strictly increasing `u`.
    Tabulated { nodes: Vec<(f64, f64)> },
}

impl TStat {
    /// Check the structural requirements of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            TStat::Linear => Ok(()),
            TStat::Plateau { tau } => {
                if !tau.is_finite() || *tau <= 0.0 || *tau >= 1.0 {
                    return Err(Error::InvalidModel(format!(
                        "plateau point must lie in (0, 1); got {tau}"
                    )));
                }
                Ok(())
            }
            TStat::Tabulated { nodes } => {
                if nodes.len() < 2 {
                    return Err(Error::InvalidModel(
                        "a tabulated statistic needs at least 2 nodes".into(),
                    ));
                }
                if nodes[0].0 != 0.0 || nodes[nodes.len() - 1].0 != 1.0 {
                    return Err(Error::InvalidModel(
                        "tabulated statistic nodes must span [0, 1] exactly".into(),
                    ));
                }
                if nodes.iter().any(|&(u, v)| !u.is_finite() || !v.is_finite()) {
                    return Err(Error::InvalidModel(
                        "tabulated statistic nodes must be finite".into(),
                    ));
                }
                for pair in nodes.windows(2) {
                    if pair[1].0 <= pair[0].0 {
                        return Err(Error::InvalidModel(
                            "tabulated statistic abscissae must increase strictly".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Evaluate `T(u)` for `u ∈ [0, 1]`.
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            TStat::Linear => u,
            TStat::Plateau { tau } => u.min(*tau),
            TStat::Tabulated { nodes } => {
                let idx = nodes.partition_point(|&(x, _)| x <= u);
                if idx == 0 {
                    return nodes[0].1;
                }
                if idx == nodes.len() {
                    return nodes[nodes.len() - 1].1;
                }
                let (x0, y0) = nodes[idx - 1];
                let (x1, y1) = nodes[idx];
                y0 + (u - x0) / (x1 - x0) * (y1 - y0)
            }
        }
    }

    /// `lim_{u -> 0+} T(u)`.
    pub fn limit_at_zero(&self) -> f64 {
        match self {
            TStat::Linear | TStat::Plateau { .. } => 0.0,
            TStat::Tabulated { nodes } => nodes[0].1,
        }
    }

    /// Exact `∫₀¹ T(u) du`.
    pub fn integral(&self) -> f64 {
        match self {
            TStat::Linear => 0.5,
            TStat::Plateau { tau } => tau - 0.5 * tau * tau,
            TStat::Tabulated { nodes } => nodes
                .windows(2)
                .map(|pair| 0.5 * (pair[1].0 - pair[0].0) * (pair[0].1 + pair[1].1))
                .sum(),
        }
    }

    /// Interior points where the statistic is not smooth; quadrature must
    /// not integrate across them in one panel.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            TStat::Linear => Vec::new(),
            TStat::Plateau { tau } => vec![*tau],
            TStat::Tabulated { nodes } => nodes
                .iter()
                .map(|&(u, _)| u)
                .filter(|&u| u > 0.0 && u < 1.0)
                .collect(),
        }
    }

    /// Exact `∫₀¹ exp(theta T(u)) du`, the reciprocal of the family's
    /// normalizing constant.  Closed form for every variant (piecewise
    /// linear statistics integrate segmentwise to exponential primitives).
    pub fn exp_integral(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            return 1.0;
        }
        match self {
            TStat::Linear => theta.exp_m1() / theta,
            TStat::Plateau { tau } => {
                (theta * tau).exp_m1() / theta + (1.0 - tau) * (theta * tau).exp()
            }
            TStat::Tabulated { nodes } => nodes
                .windows(2)
                .map(|pair| {
                    let (x0, y0) = pair[0];
                    let (x1, y1) = pair[1];
                    let width = x1 - x0;
                    if (theta * (y1 - y0)).abs() < 1e-8 {
                        // Nearly flat segment: midpoint value, relative
                        // error below (theta Δy)²/24.
                        width * (theta * 0.5 * (y0 + y1)).exp()
                    } else {
                        width * ((theta * y1).exp() - (theta * y0).exp()) / (theta * (y1 - y0))
                    }
                })
                .sum(),
        }
    }
}

/// Simpson panels over `[a, b]` split at the listed breakpoints so each
/// panel sees a smooth integrand.
fn split_simpson(f: &impl Fn(f64) -> f64, breaks: &[f64], a: f64, b: f64) -> f64 {
    let lo = breaks.partition_point(|&s| s <= a);
    let hi = breaks.partition_point(|&s| s < b);
    let panel = |x0: f64, x1: f64| (x1 - x0) / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1));
    let mut acc = 0.0;
    let mut left = a;
    for &s in &breaks[lo..hi] {
        acc += panel(left, s);
        left = s;
    }
    acc + panel(left, b)
}

/// Exponential-family density `C(theta) exp(theta T(u))` on `[0, 1]`.
///
/// The cdf is cached on a 4096-cell composite-Simpson table at construction
/// and completed by one in-cell Simpson panel per evaluation (panels split
/// at the statistic's kinks), keeping the cached cdf within `1e-8` of the
/// exact integral — in practice far closer.
#[derive(Debug, Clone)]
pub struct ExpFamilyModel {
    t: TStat,
    theta: f64,
    /// Normalizing constant `C(theta) = 1 / ∫₀¹ exp(theta T)`.
    normalizer: f64,
    /// Correction mapping the quadrature mass to exactly 1 so quantile and
    /// cdf are consistent at the endpoints.
    scale: f64,
    /// Interior kinks of `T`, used to split quadrature panels.
    breakpoints: Vec<f64>,
    /// Cumulative table at `u_i = i / 4096`, rescaled to end at exactly 1.
    cdf_nodes: Vec<f64>,
}

impl ExpFamilyModel {
    /// Build the family member at `theta`; fails when `T` is malformed or
    /// when `lim_{u->0} T(u) = ∫₀¹ T(u) du`, which would make every local
    /// alternative direction degenerate.
    pub fn new(t: TStat, theta: f64) -> Result<Self> {
        t.validate()?;
        if !theta.is_finite() {
            return Err(Error::InvalidModel(format!(
                "exponential-family parameter must be finite; got {theta}"
            )));
        }
        if (t.limit_at_zero() - t.integral()).abs() <= 1e-9 {
            return Err(Error::InvalidModel(
                "the statistic's limit at 0 must differ from its integral \
                 over [0, 1]; otherwise departures are invisible to \
                 exceedances"
                    .into(),
            ));
        }
        let mass = t.exp_integral(theta);
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidModel(format!(
                "exponential-family normalizing integral must be positive \
                 and finite; got {mass}"
            )));
        }
        let normalizer = 1.0 / mass;
        let breakpoints = t.breakpoints();

        // Composite-Simpson cumulative table of the normalized density;
        // its end value cross-checks the closed-form normalizer.
        let n = EXPFAM_CDF_CELLS;
        let h = 1.0 / n as f64;
        let dens = |u: f64| normalizer * (theta * t.eval(u)).exp();
        let mut cdf_nodes = Vec::with_capacity(n + 1);
        cdf_nodes.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            let a = i as f64 * h;
            acc += split_simpson(&dens, &breakpoints, a, a + h);
            cdf_nodes.push(acc);
        }
        let total = *cdf_nodes.last().unwrap();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Evaluation(format!(
                "exponential-family density mass {total} deviates from 1 \
                 beyond 1e-9"
            )));
        }
        let scale = 1.0 / total;
        for v in &mut cdf_nodes {
            *v *= scale;
        }
        Ok(Self {
            t,
            theta,
            normalizer,
            scale,
            breakpoints,
            cdf_nodes,
        })
    }

    /// The statistic `T`.
    pub fn statistic(&self) -> &TStat {
        &self.t
    }

    /// Family parameter `theta`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Normalizing constant `C(theta)`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    fn density(&self, u: f64) -> f64 {
        self.scale * self.normalizer * (self.theta * self.t.eval(u)).exp()
    }

    fn cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let n = EXPFAM_CDF_CELLS;
        let cell = ((u * n as f64) as usize).min(n - 1);
        let a = cell as f64 / n as f64;
        let partial = if u > a {
            split_simpson(&|x| self.density(x), &self.breakpoints, a, u)
        } else {
            0.0
        };
        (self.cdf_nodes[cell] + partial).min(1.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let idx = self.cdf_nodes.partition_point(|&v| v <= p);
        let cell = idx.clamp(1, EXPFAM_CDF_CELLS) - 1;
        let n = EXPFAM_CDF_CELLS as f64;
        let (lo, hi) = (cell as f64 / n, (cell + 1) as f64 / n);
        let (plo, phi) = (self.cdf_nodes[cell], self.cdf_nodes[cell + 1]);
        let start = if phi > plo {
            lo + (p - plo) / (phi - plo) * (hi - lo)
        } else {
            0.5 * (lo + hi)
        };
        invert_increasing(|u| self.cdf(u), |u| self.density(u), p, lo, hi, start)
    }
}

// --- Unified W model ---------------------------------------------------------

/// A distribution for the radial variable `W`.
#[derive(Debug, Clone)]
pub enum WModel {
    /// The null: `W ~ uniform(0, 1)`.
    Uniform01,
    /// Lower-tail polynomial departure family.
    Delta(DeltaModel),
    /// Standard exponential distribution on `[0, ∞)`; a delta-type
    /// departure with `delta = 1`, `theta = -1`.
    StdExponential,
    /// Exponential family `C(theta) exp(theta T(u))`.
    ExpFamily(ExpFamilyModel),
}

impl WModel {
    /// Density at `u`; `u` must lie in the support (`[0, 1]` for all
    /// variants except `StdExponential`, whose support is `[0, ∞)`).
    pub fn density(&self, u: f64) -> Result<f64> {
        let sup = match self {
            WModel::StdExponential => f64::INFINITY,
            _ => 1.0,
        };
        if u.is_nan() || u < 0.0 || u > sup {
            return Err(Error::Domain(format!(
                "density argument {u} lies outside the model support"
            )));
        }
        Ok(match self {
            WModel::Uniform01 => 1.0,
            WModel::Delta(m) => m.density(u),
            WModel::StdExponential => (-u).exp(),
            WModel::ExpFamily(m) => m.density(u),
        })
    }

    /// Distribution function at `u`, extended by 0 below the support and by
    /// its limit above; total on all finite reals.
    pub fn cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self {
            WModel::Uniform01 => u.min(1.0),
            WModel::Delta(m) => m.cdf(u),
            WModel::StdExponential => -(-u).exp_m1(),
            WModel::ExpFamily(m) => m.cdf(u),
        }
    }

    /// Quantile at level `p ∈ [0, 1)`; exact inverse of [`cdf`](Self::cdf)
    /// (closed form where available, safeguarded Newton to 1e-12 otherwise).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !p.is_finite() || !(0.0..1.0).contains(&p) {
            return Err(Error::Domain(format!(
                "quantile level must lie in [0, 1); got {p}"
            )));
        }
        Ok(match self {
            WModel::Uniform01 => p,
            WModel::Delta(m) => m.quantile(p),
            WModel::StdExponential => -(-p).ln_1p(),
            WModel::ExpFamily(m) => m.quantile(p),
        })
    }

    /// Exact inverse-cdf sample.
    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        let p = rng.uniform();
        self.quantile(p)
            .expect("uniform draws lie in [0, 1) by construction")
    }

    /// Upper bound on `|c| * m` below which the model's closed-form
    /// lower-tail expansion is exact (`None` when no guard is needed).
    pub fn threshold_bound(&self) -> Option<f64> {
        match self {
            WModel::Delta(m) => Some(m.cutoff()),
            _ => None,
        }
    }
}

/// A one-parameter family `theta -> WModel`, the object local asymptotics
/// and power curves are stated for.
#[derive(Debug, Clone)]
pub enum WFamily {
    /// Delta family with fixed roughness and cutoff.
    Delta { delta: f64, u0: f64 },
    /// Exponential family with fixed statistic.
    ExpFamily { t: TStat },
}

impl WFamily {
    /// Member of the family at parameter `theta` (`theta = 0` is the null
    /// on the region relevant to exceedances).
    pub fn model(&self, theta: f64) -> Result<WModel> {
        match self {
            WFamily::Delta { delta, u0 } => {
                if theta == 0.0 {
                    // Exactly the null; avoids spurious validity-range
                    // failures for extreme cutoffs.
                    DeltaModel::new(*delta, 0.0, *u0).map(WModel::Delta)
                } else {
                    DeltaModel::new(*delta, theta, *u0).map(WModel::Delta)
                }
            }
            WFamily::ExpFamily { t } => {
                ExpFamilyModel::new(t.clone(), theta).map(WModel::ExpFamily)
            }
        }
    }

    /// Roughness exponent governing the family's local rates: `delta` for
    /// the delta family, none for exponential families (their rate exponent
    /// is 0).
    pub fn roughness(&self) -> Option<f64> {
        match self {
            WFamily::Delta { delta, .. } => Some(*delta),
            WFamily::ExpFamily { .. } => None,
        }
    }
}
