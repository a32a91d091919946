//! Generator processes and the law of their pathwise infimum.
//!
//! A generator `Z` is a continuous process on `[0, 1]` with `0 <= Z_t <= m`
//! and `E(Z_t) = 1` for every `t`.  Every test statistic in this crate
//! depends on `Z` only through the distribution of `inf_t Z_t`, so the
//! canonical interface is [`InfLaw`]: a discrete law with its moments.  Full
//! sample paths exist for validation, demos, and the functional simulation
//! path used to cross-check the reduced sampler.

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Largest number of support atoms an [`InfLaw`] may carry.
pub const MAX_INF_LAW_ATOMS: usize = 1_000_000;

/// One support point of a discrete infimum law.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InfLawAtom {
    /// Support value `z >= 0`.
    pub value: f64,
    /// Probability weight `p > 0`.
    pub weight: f64,
}

/// Discrete probability law of `inf_t Z_t`.
///
/// Atoms are held sorted by value with exact duplicates merged, so two laws
/// describing the same distribution compare equal.  The mean of this law is
/// the constant `E(inf Z)` appearing in the exceedance probability under the
/// null, and `moment(1 + delta)` is the moment driving local power.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InfLaw {
    atoms: Vec<InfLawAtom>,
    /// Cumulative weights aligned with `atoms`, for inverse-cdf sampling.
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl InfLaw {
    /// Build a law from `(value, weight)` pairs.
    ///
    /// Weights must be strictly positive and sum to 1 within `1e-12`;
    /// values must be finite and nonnegative; at most
    /// [`MAX_INF_LAW_ATOMS`] atoms are accepted.
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidModel(
                "an infimum law needs at least one atom".into(),
            ));
        }
        if pairs.len() > MAX_INF_LAW_ATOMS {
            return Err(Error::InvalidModel(format!(
                "infimum law has {} atoms; the cap is {MAX_INF_LAW_ATOMS}",
                pairs.len()
            )));
        }
        let mut total = 0.0;
        for &(z, p) in &pairs {
            if !z.is_finite() || z < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "infimum-law support values must be finite and nonnegative; got {z}"
                )));
            }
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "infimum-law weights must be strictly positive; got {p}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "infimum-law weights must sum to 1 within 1e-12; got {total}"
            )));
        }
        let mut sorted = pairs;
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<InfLawAtom> = Vec::with_capacity(sorted.len());
        for (z, p) in sorted {
            match atoms.last_mut() {
                Some(last) if last.value == z => last.weight += p,
                _ => atoms.push(InfLawAtom {
                    value: z,
                    weight: p,
                }),
            }
        }
        Ok(Self::from_atoms(atoms))
    }

    fn from_atoms(atoms: Vec<InfLawAtom>) -> Self {
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for atom in &atoms {
            acc += atom.weight;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0; // guard the inverse cdf against rounding at the top
        }
        Self { atoms, cumulative }
    }

    /// Sorted, deduplicated support atoms.
    pub fn atoms(&self) -> &[InfLawAtom] {
        &self.atoms
    }

    /// Raw moment `E[(inf Z)^order]` for `order >= 0`.
    pub fn moment(&self, order: f64) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * a.value.powf(order))
            .sum()
    }

    /// First moment `E(inf Z)`.
    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.value).sum()
    }

    /// Largest support point (a lower bound for the generator bound `m`).
    pub fn max_value(&self) -> f64 {
        self.atoms.last().map_or(0.0, |a| a.value)
    }

    /// Draw one value of `inf Z` by inverse-cdf lookup.
    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        let u = rng.uniform();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.atoms[idx.min(self.atoms.len() - 1)].value
    }
}

// Serde skips the cumulative cache, so rebuild it after deserializing.
impl<'de> serde::Deserialize<'de> for InfLaw {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            atoms: Vec<InfLawAtom>,
        }
        let raw = Raw::deserialize(deserializer)?;
        InfLaw::new(raw.atoms.into_iter().map(|a| (a.value, a.weight)).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// Tolerance configuration and findings of a generator validation run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    /// Number of equally spaced grid nodes inspected.
    pub grid_size: usize,
    /// Monte Carlo paths drawn (0 when all checks are analytic).
    pub mc_samples: usize,
    /// Whether per-node means were computed analytically (true) or by
    /// Monte Carlo (false).
    pub analytic_means: bool,
    /// Largest observed `|mean(Z_t) - 1|` over the grid.
    pub max_mean_deviation: f64,
    /// Tolerance the deviation was held against (1e-9 analytic, 3 standard
    /// errors for Monte Carlo).
    pub mean_tolerance: f64,
    /// `max_mean_deviation <= mean_tolerance`.
    pub means_within_tolerance: bool,
    /// Number of sampled/tabulated values outside `[0, m]`.
    pub bound_violations: usize,
    /// Mean of the infimum law (must be strictly positive for any test to
    /// have power).
    pub inf_mean: f64,
    /// `inf_mean > 0`.
    pub inf_mean_positive: bool,
}

impl ValidationReport {
    /// True when no scientific requirement is violated.
    pub fn passed(&self) -> bool {
        self.means_within_tolerance && self.bound_violations == 0 && self.inf_mean_positive
    }
}

/// The built-in generator processes.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorModel {
    /// `Z_t = 1` for all `t` (bound `m = 1`).
    Constant,
    /// `Z_t = 1 + a sin(2π(t + S))` with a uniform random phase `S` and
    /// amplitude `a ∈ [0, 1]` (bound `m = 1 + a`).
    SinePhase { amplitude: f64 },
    /// Uniform random choice among `k` tabulated deterministic functions on
    /// an equally spaced grid over `[0, 1]`; their pointwise average must be
    /// 1 at every node (bound `m` = largest tabulated value).
    FiniteMixture { functions: Vec<Vec<f64>> },
    /// A generator known only through the law of its infimum; has no path
    /// law, so only reduced simulation is available.
    ExplicitInfLaw { law: InfLaw },
}

impl GeneratorModel {
    /// Check the structural invariants of the variant.
    ///
    /// `Constant` is always valid.  `SinePhase` needs `a ∈ [0, 1]`.
    /// `FiniteMixture` needs at least one function, equal lengths >= 2,
    /// values in `[0, m]` and node averages equal to 1 within `1e-9`.
    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratorModel::Constant => Ok(()),
            GeneratorModel::SinePhase { amplitude } => {
                if !amplitude.is_finite() || !(0.0..=1.0).contains(amplitude) {
                    return Err(Error::InvalidModel(format!(
                        "sine-phase amplitude must lie in [0, 1]; got {amplitude}"
                    )));
                }
                Ok(())
            }
            GeneratorModel::FiniteMixture { functions } => {
                if functions.is_empty() {
                    return Err(Error::InvalidModel(
                        "a finite mixture needs at least one component function".into(),
                    ));
                }
                let len = functions[0].len();
                if len < 2 {
                    return Err(Error::InvalidModel(
                        "mixture components must be tabulated on at least 2 grid nodes".into(),
                    ));
                }
                for f in functions {
                    if f.len() != len {
                        return Err(Error::InvalidModel(
                            "all mixture components must share the same grid length".into(),
                        ));
                    }
                    for &v in f {
                        if !v.is_finite() || v < 0.0 {
                            return Err(Error::InvalidModel(format!(
                                "mixture component values must be finite and nonnegative; got {v}"
                            )));
                        }
                    }
                }
                let k = functions.len() as f64;
                for i in 0..len {
                    let mean: f64 = functions.iter().map(|f| f[i]).sum::<f64>() / k;
                    if (mean - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidModel(format!(
                            "mixture node means must equal 1 within 1e-9; node {i} has mean {mean}"
                        )));
                    }
                }
                Ok(())
            }
            GeneratorModel::ExplicitInfLaw { .. } => Ok(()),
        }
    }

    /// Upper bound `m` of the process (largest value the variant can take).
    pub fn bound(&self) -> f64 {
        match self {
            GeneratorModel::Constant => 1.0,
            GeneratorModel::SinePhase { amplitude } => 1.0 + amplitude,
            GeneratorModel::FiniteMixture { functions } => functions
                .iter()
                .flat_map(|f| f.iter().copied())
                .fold(0.0, f64::max),
            GeneratorModel::ExplicitInfLaw { law } => law.max_value(),
        }
    }

    /// Exact law of `inf_t Z_t`.
    ///
    /// * `Constant` and `SinePhase`: one-point laws (the sine infimum is
    ///   `1 - a` for every phase).
    /// * `FiniteMixture`: per-component tabulated minimum with equal
    ///   weights; carries the documented grid-resolution bias of the
    ///   tabulation itself.
    /// * `ExplicitInfLaw`: pass-through.
    pub fn inf_law(&self) -> Result<InfLaw> {
        self.validate()?;
        match self {
            GeneratorModel::Constant => InfLaw::new(vec![(1.0, 1.0)]),
            GeneratorModel::SinePhase { amplitude } => InfLaw::new(vec![(1.0 - amplitude, 1.0)]),
            GeneratorModel::FiniteMixture { functions } => {
                let k = functions.len() as f64;
                InfLaw::new(
                    functions
                        .iter()
                        .map(|f| (f.iter().copied().fold(f64::INFINITY, f64::min), 1.0 / k))
                        .collect(),
                )
            }
            GeneratorModel::ExplicitInfLaw { law } => Ok(law.clone()),
        }
    }

    /// One realization of `Z` on `grid` (sorted values in `[0, 1]`).
    ///
    /// `ExplicitInfLaw` has no path law and returns a model error.
    pub fn sample_path(&self, grid: &[f64], rng: &mut RandomStream) -> Result<Vec<f64>> {
        let mut out = vec![0.0; grid.len()];
        self.sample_path_into(grid, rng, &mut out)?;
        Ok(out)
    }

    /// As [`sample_path`](Self::sample_path) but writing into a caller
    /// buffer (`out.len() == grid.len()`), for tight simulation loops.
    pub fn sample_path_into(
        &self,
        grid: &[f64],
        rng: &mut RandomStream,
        out: &mut [f64],
    ) -> Result<()> {
        self.validate()?;
        assert_eq!(grid.len(), out.len(), "output buffer must match the grid");
        if grid.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::Domain(
                "sample-path grid points must lie in [0, 1]".into(),
            ));
        }
        match self {
            GeneratorModel::Constant => out.fill(1.0),
            GeneratorModel::SinePhase { amplitude } => {
                let phase = rng.uniform();
                sine_path(*amplitude, phase, grid, out);
            }
            GeneratorModel::FiniteMixture { functions } => {
                let j = (rng.uniform() * functions.len() as f64) as usize;
                let f = &functions[j.min(functions.len() - 1)];
                for (slot, &t) in out.iter_mut().zip(grid) {
                    *slot = interpolate(f, t);
                }
            }
            GeneratorModel::ExplicitInfLaw { .. } => {
                return Err(Error::InvalidModel(
                    "explicit infimum-law generators carry no path law; \
                     use reduced simulation"
                        .into(),
                ));
            }
        }
        Ok(())
    }

    /// Check `E(Z_t) = 1` per grid node, the `[0, m]` bound, and positivity
    /// of `E(inf Z)`, reporting findings instead of failing.
    ///
    /// Means are analytic (tolerance `1e-9`) for `Constant`, `FiniteMixture`
    /// and `ExplicitInfLaw` (vacuous for the latter) and Monte Carlo over
    /// `mc_samples` paths (tolerance 3 standard errors) for `SinePhase`.
    pub fn validate_report(
        &self,
        grid_size: usize,
        mc_samples: usize,
        seed: u64,
    ) -> Result<ValidationReport> {
        self.validate()?;
        if grid_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "validation grid must have at least 2 nodes; got {grid_size}"
            )));
        }
        let law = self.inf_law()?;
        let inf_mean = law.mean();
        let m = self.bound();
        let grid: Vec<f64> = (0..grid_size)
            .map(|i| i as f64 / (grid_size - 1) as f64)
            .collect();

        let (analytic_means, max_dev, tol, used_samples, bound_violations) = match self {
            GeneratorModel::Constant | GeneratorModel::ExplicitInfLaw { .. } => {
                (true, 0.0, 1e-9, 0, 0)
            }
            GeneratorModel::FiniteMixture { functions } => {
                // Tabulated nodes need not align with the requested grid;
                // the means are exact at the tabulation nodes, so check
                // there.
                let k = functions.len() as f64;
                let mut max_dev: f64 = 0.0;
                let mut violations = 0;
                for i in 0..functions[0].len() {
                    let mean: f64 = functions.iter().map(|f| f[i]).sum::<f64>() / k;
                    max_dev = max_dev.max((mean - 1.0).abs());
                }
                for f in functions {
                    violations += f.iter().filter(|&&v| v < 0.0 || v > m + 1e-12).count();
                }
                (true, max_dev, 1e-9, 0, violations)
            }
            GeneratorModel::SinePhase { .. } => {
                if mc_samples == 0 {
                    return Err(Error::InvalidConfig(
                        "Monte Carlo validation needs mc_samples >= 1".into(),
                    ));
                }
                let mut rng = RandomStream::substream(seed, 0);
                let mut sums = vec![0.0; grid.len()];
                let mut sumsqs = vec![0.0; grid.len()];
                let mut path = vec![0.0; grid.len()];
                let mut violations = 0;
                for _ in 0..mc_samples {
                    self.sample_path_into(&grid, &mut rng, &mut path)?;
                    for (i, &z) in path.iter().enumerate() {
                        if z < -1e-12 || z > m + 1e-12 {
                            violations += 1;
                        }
                        sums[i] += z;
                        sumsqs[i] += z * z;
                    }
                }
                let n = mc_samples as f64;
                let mut max_dev: f64 = 0.0;
                let mut max_se: f64 = 0.0;
                for i in 0..grid.len() {
                    let mean = sums[i] / n;
                    let var = (sumsqs[i] / n - mean * mean).max(0.0);
                    max_dev = max_dev.max((mean - 1.0).abs());
                    max_se = max_se.max((var / n).sqrt());
                }
                (false, max_dev, 3.0 * max_se, mc_samples, violations)
            }
        };

        Ok(ValidationReport {
            grid_size,
            mc_samples: used_samples,
            analytic_means,
            max_mean_deviation: max_dev,
            mean_tolerance: tol,
            means_within_tolerance: max_dev <= tol,
            bound_violations,
            inf_mean,
            inf_mean_positive: inf_mean > 0.0,
        })
    }
}

/// Evaluate the sine generator `1 + a sin(2π(t + phase))` on a grid.
fn sine_path(amplitude: f64, phase: f64, grid: &[f64], out: &mut [f64]) {
    for (slot, &t) in out.iter_mut().zip(grid) {
        *slot = 1.0 + amplitude * (std::f64::consts::TAU * (t + phase)).sin();
    }
}

/// Piecewise-linear interpolation of a tabulation over the uniform grid on
/// `[0, 1]`.
fn interpolate(table: &[f64], t: f64) -> f64 {
    let pos = t * (table.len() - 1) as f64;
    let lo = (pos.floor() as usize).min(table.len() - 2);
    let frac = pos - lo as f64;
    table[lo] + frac * (table[lo + 1] - table[lo])
}
