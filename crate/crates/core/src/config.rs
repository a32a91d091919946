//! Declarative experiment configuration.
//!
//! Experiments have many coupled parameters (family, generator, local
//! parameter, threshold schedule, replication budget), so they are bound
//! into one serializable unit that resolves to the core model types.  The
//! TOML schema is stable: parse → serialize → parse is the identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exceedance::{ThresholdSchedule, DEFAULT_PATH_FLOOR, DEFAULT_THRESHOLD_SCALE};
use crate::generator::{GeneratorModel, InfLaw};
use crate::teststats::TestSide;
use crate::wmodel::{DeltaModel, TStat, WFamily};

/// Which test statistic an experiment evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    /// Family-specific optimal test (combined count/value statistic for
    /// the delta family, count statistic for exponential families).
    Optimal,
    /// Parameter-free omnibus test on normal-transformed values.
    Omnibus,
}

impl TestKind {
    /// Stable label used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            TestKind::Optimal => "optimal",
            TestKind::Omnibus => "omnibus",
        }
    }
}

/// Generator process specification (serializable mirror of
/// [`GeneratorModel`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Degenerate generator `Z ≡ 1`.
    Constant,
    /// `Z_t = 1 + amplitude · sin(2π(t + phase))` with uniform phase.
    SinePhase { amplitude: f64 },
    /// Uniform mixture of tabulated unit-mean functions on a regular grid.
    FiniteMixture { functions: Vec<Vec<f64>> },
    /// Direct specification of the law of the pathwise infimum as
    /// `[value, weight]` atoms.
    ExplicitInfLaw { atoms: Vec<(f64, f64)> },
}

impl GeneratorSpec {
    /// Build and validate the generator model.
    pub fn build(&self) -> Result<GeneratorModel> {
        let model = match self {
            GeneratorSpec::Constant => GeneratorModel::Constant,
            GeneratorSpec::SinePhase { amplitude } => GeneratorModel::SinePhase {
                amplitude: *amplitude,
            },
            GeneratorSpec::FiniteMixture { functions } => GeneratorModel::FiniteMixture {
                functions: functions.clone(),
            },
            GeneratorSpec::ExplicitInfLaw { atoms } => GeneratorModel::ExplicitInfLaw {
                law: InfLaw::new(atoms.clone())?,
            },
        };
        model.validate()?;
        Ok(model)
    }
}

/// Statistic specification for exponential families (serializable mirror
/// of [`TStat`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TSpec {
    /// `T(u) = u`.
    Linear,
    /// `T(u) = min(u, tau)`.
    Plateau { tau: f64 },
    /// Piecewise-linear interpolation of `[u, T(u)]` nodes spanning [0, 1].
    Tabulated { nodes: Vec<(f64, f64)> },
}

impl TSpec {
    fn build(&self) -> Result<TStat> {
        let t = match self {
            TSpec::Linear => TStat::Linear,
            TSpec::Plateau { tau } => TStat::Plateau { tau: *tau },
            TSpec::Tabulated { nodes } => TStat::Tabulated {
                nodes: nodes.clone(),
            },
        };
        t.validate()?;
        Ok(t)
    }
}

/// Deviation-family specification (serializable mirror of [`WFamily`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WSpec {
    /// Power-deviation family with roughness `delta` and optional density
    /// cutoff `u0` (default 1/2).
    Delta {
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u0: Option<f64>,
    },
    /// Exponential family generated by a bounded statistic.
    Expfam { t: TSpec },
}

impl WSpec {
    /// Build and validate the family.
    pub fn build(&self) -> Result<WFamily> {
        match self {
            WSpec::Delta { delta, u0 } => {
                let u0 = u0.unwrap_or(DeltaModel::DEFAULT_CUTOFF);
                // Instantiating the null member runs the full parameter
                // validation for (delta, u0).
                DeltaModel::new(*delta, 0.0, u0)?;
                Ok(WFamily::Delta { delta: *delta, u0 })
            }
            WSpec::Expfam { t } => Ok(WFamily::ExpFamily { t: t.build()? }),
        }
    }
}

/// Threshold specification: either a fixed level `c` or a schedule
/// `c_n = -c0 · n^{-gamma}`; unset fields fall back to family defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    /// Fixed threshold (mutually exclusive with `c0`/`gamma`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Schedule scale (default 0.5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    /// Schedule decay exponent (default `1/(2(1+2δ))` for the delta
    /// family, `1/3` for exponential families).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl ThresholdSpec {
    /// Fixed threshold at level `c`.
    pub fn fixed(c: f64) -> Self {
        Self {
            c: Some(c),
            c0: None,
            gamma: None,
        }
    }

    /// Resolve to either a fixed level or an admissible schedule for the
    /// given family.
    pub fn resolve(&self, family: &WFamily) -> Result<ResolvedThreshold> {
        if let Some(c) = self.c {
            if self.c0.is_some() || self.gamma.is_some() {
                return Err(Error::InvalidConfig(
                    "threshold: a fixed level `c` excludes schedule fields `c0`/`gamma`".into(),
                ));
            }
            if !(c.is_finite() && c < 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "threshold: fixed level must be a finite negative real; got {c}"
                )));
            }
            return Ok(ResolvedThreshold::Fixed(c));
        }
        let c0 = self.c0.unwrap_or(DEFAULT_THRESHOLD_SCALE);
        let schedule = match (self.gamma, family) {
            (Some(gamma), _) => ThresholdSchedule::new(c0, gamma)?,
            (None, WFamily::Delta { delta, .. }) => {
                let default = ThresholdSchedule::delta_default(*delta)?;
                ThresholdSchedule::new(c0, default.gamma)?
            }
            (None, WFamily::ExpFamily { .. }) => {
                ThresholdSchedule::new(c0, ThresholdSchedule::expfam_default().gamma)?
            }
        };
        let admissible = match family {
            WFamily::Delta { delta, .. } => schedule.admissible_for_delta(*delta),
            WFamily::ExpFamily { .. } => schedule.admissible_for_expfam(),
        };
        if !admissible {
            return Err(Error::InvalidConfig(format!(
                "threshold: schedule exponent {} is inadmissible for this family \
                 (decay must be slow enough that exceedances accumulate)",
                schedule.gamma
            )));
        }
        Ok(ResolvedThreshold::Schedule(schedule))
    }
}

/// A threshold specification after validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedThreshold {
    /// Same level for every sample size.
    Fixed(f64),
    /// Level decaying with the sample size.
    Schedule(ThresholdSchedule),
}

impl ResolvedThreshold {
    /// Threshold level used with `n` observations.
    pub fn at(&self, n: usize) -> Result<f64> {
        let c = match self {
            ResolvedThreshold::Fixed(c) => *c,
            ResolvedThreshold::Schedule(s) => s.threshold_at(n),
        };
        if !(c.is_finite() && c < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold level at n = {n} is {c}; need a finite negative real \
                 (schedules require n >= 1)"
            )));
        }
        Ok(c)
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_grid_size() -> usize {
    512
}

fn default_path_floor() -> f64 {
    DEFAULT_PATH_FLOOR
}

fn default_power_tolerance() -> f64 {
    0.05
}

fn default_lan_relative_tolerance() -> f64 {
    0.15
}

/// One runnable experiment: family, generator, local parameter, threshold
/// and replication budget.
///
/// The experiment-level alternative parameter is `xi`; the family parameter
/// `theta_n` is recomputed from `(xi, n, c_n)` wherever it is needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Observations per replication.
    pub n: usize,
    /// Monte Carlo replications.
    pub replications: usize,
    /// Master seed; replication `r` uses the derived substream `(seed, r)`.
    pub seed: u64,
    /// Test level (default 0.05).
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Local alternative parameter (default 0 = null).
    #[serde(default)]
    pub xi: f64,
    /// Optional grid of local parameters for power curves; falls back to
    /// `[xi]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xis: Option<Vec<f64>>,
    /// Tests to evaluate (default: optimal and omnibus).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests: Option<Vec<TestKind>>,
    /// Rejection side (default upper).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<TestSide>,
    /// Clipping floor for functional path simulation (default -1).
    #[serde(default = "default_path_floor")]
    pub path_floor: f64,
    /// Grid resolution for functional path simulation and generator
    /// validation (default 512).
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Absolute tolerance granted on rejection rates in addition to the
    /// 99% confidence interval (default 0.05).
    #[serde(default = "default_power_tolerance")]
    pub power_tolerance: f64,
    /// Relative tolerance for empirical moment checks (default 0.15).
    #[serde(default = "default_lan_relative_tolerance")]
    pub lan_relative_tolerance: f64,
    /// Generator process.
    pub generator: GeneratorSpec,
    /// Deviation family.
    pub w: WSpec,
    /// Threshold level or schedule.
    pub threshold: ThresholdSpec,
}

impl ExperimentConfig {
    /// Parse from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serialize to TOML text (round-trips through [`Self::from_toml_str`]).
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::InvalidConfig(format!("config serialization error: {e}")))
    }

    /// Check the scalar invariants and that every component resolves.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "replications: at least one replication is required".into(),
            ));
        }
        if !(self.alpha.is_finite() && 0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha: test level must lie in (0, 1); got {}",
                self.alpha
            )));
        }
        if !self.xi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "xi: local parameter must be finite; got {}",
                self.xi
            )));
        }
        if let Some(xis) = &self.xis {
            if xis.is_empty() || xis.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(
                    "xis: the local-parameter grid must be nonempty and finite".into(),
                ));
            }
        }
        if let Some(tests) = &self.tests {
            if tests.is_empty() {
                return Err(Error::InvalidConfig(
                    "tests: the test list must be nonempty when given".into(),
                ));
            }
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid_size: functional simulation needs at least 2 nodes; got {}",
                self.grid_size
            )));
        }
        if !(self.power_tolerance.is_finite() && self.power_tolerance >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "power_tolerance: must be a nonnegative real; got {}",
                self.power_tolerance
            )));
        }
        if !(self.lan_relative_tolerance.is_finite() && self.lan_relative_tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lan_relative_tolerance: must be a positive real; got {}",
                self.lan_relative_tolerance
            )));
        }
        self.generator.build()?;
        let family = self.w.build()?;
        self.threshold.resolve(&family)?;
        Ok(())
    }

    /// Local-parameter grid for power curves.
    pub fn xi_grid(&self) -> Vec<f64> {
        self.xis.clone().unwrap_or_else(|| vec![self.xi])
    }

    /// Tests to evaluate.
    pub fn test_list(&self) -> Vec<TestKind> {
        self.tests
            .clone()
            .unwrap_or_else(|| vec![TestKind::Optimal, TestKind::Omnibus])
    }

    /// Rejection side.
    pub fn test_side(&self) -> TestSide {
        self.side.unwrap_or(TestSide::Upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_toml() -> &'static str {
        r#"
            n = 10000
            replications = 100
            seed = 42

            [generator]
            variant = "constant"

            [w]
            family = "delta"
            delta = 1.0

            [threshold]
            c0 = 0.5
        "#
    }

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(base_toml()).unwrap();
        assert_eq!(cfg.n, 10_000);
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.xi, 0.0);
        assert_eq!(cfg.grid_size, 512);
        assert_eq!(cfg.path_floor, -1.0);
        assert_eq!(cfg.power_tolerance, 0.05);
        assert_eq!(cfg.xi_grid(), vec![0.0]);
        assert_eq!(cfg.test_list(), vec![TestKind::Optimal, TestKind::Omnibus]);
        assert_eq!(cfg.test_side(), TestSide::Upper);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::from_toml_str(base_toml()).unwrap();
        cfg.xis = Some(vec![0.0, 1.0, 2.0]);
        cfg.tests = Some(vec![TestKind::Optimal]);
        cfg.side = Some(TestSide::Lower);
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn round_trips_every_component_variant() {
        let toml = r#"
            n = 50
            replications = 10
            seed = 7
            alpha = 0.01
            xi = 1.5

            [generator]
            variant = "finite-mixture"
            functions = [[0.5, 1.5], [1.5, 0.5]]

            [w]
            family = "expfam"

            [w.t]
            kind = "plateau"
            tau = 0.25

            [threshold]
            c = -0.05
        "#;
        let cfg = ExperimentConfig::from_toml_str(toml).unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(cfg, ExperimentConfig::from_toml_str(&text).unwrap());

        let toml = r#"
            n = 50
            replications = 10
            seed = 7

            [generator]
            variant = "explicit-inf-law"
            atoms = [[0.5, 0.25], [1.0, 0.75]]

            [w]
            family = "expfam"

            [w.t]
            kind = "tabulated"
            nodes = [[0.0, 0.0], [0.5, 0.8], [1.0, 1.0]]

            [threshold]
            gamma = 0.25
        "#;
        let cfg = ExperimentConfig::from_toml_str(toml).unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(cfg, ExperimentConfig::from_toml_str(&text).unwrap());
    }

    #[test]
    fn rejects_invalid_scalars() {
        for (patch, needle) in [
            ("replications = 0", "replications"),
            ("alpha = 1.0", "alpha"),
            ("alpha = 0.0", "alpha"),
            ("xis = []", "xis"),
            ("tests = []", "tests"),
            ("grid_size = 1", "grid_size"),
            ("power_tolerance = -0.1", "power_tolerance"),
            ("lan_relative_tolerance = 0.0", "lan_relative_tolerance"),
        ] {
            let text = base_toml().replace("replications = 100", patch);
            let text = if patch.starts_with("replications") {
                text
            } else {
                format!("replications = 100\n{text}")
            };
            let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
            let msg = err.to_string();
            assert!(msg.contains(needle), "{patch}: {msg}");
        }
    }

    #[test]
    fn rejects_unknown_keys_with_a_path() {
        let text = format!("{}\nbogus_key = 3\n", base_toml().trim_end());
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn fixed_threshold_excludes_schedule_fields() {
        let family = WFamily::Delta {
            delta: 1.0,
            u0: 0.5,
        };
        let spec = ThresholdSpec {
            c: Some(-0.05),
            c0: Some(0.5),
            gamma: None,
        };
        assert!(spec.resolve(&family).is_err());
        let spec = ThresholdSpec::fixed(-0.05);
        assert_eq!(spec.resolve(&family).unwrap().at(123).unwrap(), -0.05);
        assert!(ThresholdSpec::fixed(0.05).resolve(&family).is_err());
    }

    #[test]
    fn schedule_defaults_depend_on_the_family() {
        let delta_family = WFamily::Delta {
            delta: 1.0,
            u0: 0.5,
        };
        let exp_family = WFamily::ExpFamily { t: TStat::Linear };
        let spec = ThresholdSpec::default();
        match spec.resolve(&delta_family).unwrap() {
            ResolvedThreshold::Schedule(s) => {
                assert_eq!(s.c0, 0.5);
                assert!((s.gamma - 1.0 / 6.0).abs() < 1e-15);
            }
            other => panic!("expected a schedule, got {other:?}"),
        }
        match spec.resolve(&exp_family).unwrap() {
            ResolvedThreshold::Schedule(s) => {
                assert!((s.gamma - 1.0 / 3.0).abs() < 1e-15);
            }
            other => panic!("expected a schedule, got {other:?}"),
        }
    }

    #[test]
    fn inadmissible_schedules_are_rejected() {
        let family = WFamily::Delta {
            delta: 1.0,
            u0: 0.5,
        };
        // gamma must stay below 1/(1+2δ) = 1/3 for δ = 1.
        let spec = ThresholdSpec {
            c: None,
            c0: None,
            gamma: Some(0.4),
        };
        assert!(spec.resolve(&family).is_err());
        let exp_family = WFamily::ExpFamily { t: TStat::Linear };
        let spec = ThresholdSpec {
            c: None,
            c0: None,
            gamma: Some(1.0),
        };
        assert!(spec.resolve(&exp_family).is_err());
    }

    #[test]
    fn schedule_threshold_levels_are_finite_and_negative() {
        let family = WFamily::ExpFamily { t: TStat::Linear };
        let resolved = ThresholdSpec::default().resolve(&family).unwrap();
        let c = resolved.at(1_000_000).unwrap();
        assert!((c - (-0.005)).abs() < 1e-12, "{c}");
        // n = 0 makes a schedule blow up; a fixed level still works.
        assert!(resolved.at(0).is_err());
        assert!(ThresholdSpec::fixed(-0.1)
            .resolve(&family)
            .unwrap()
            .at(0)
            .is_ok());
    }

    #[test]
    fn component_validation_is_reached_from_the_config() {
        // Generator invalid: sine amplitude above 1.
        let text = base_toml().replace(
            "variant = \"constant\"",
            "variant = \"sine-phase\"\namplitude = 1.5",
        );
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        // Family invalid: delta outside (0, 1].
        let text = base_toml().replace("delta = 1.0", "delta = 1.5");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        // Custom cutoff accepted.
        let text = base_toml().replace("delta = 1.0", "delta = 1.0\nu0 = 0.25");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        match cfg.w.build().unwrap() {
            WFamily::Delta { u0, .. } => assert_eq!(u0, 0.25),
            other => panic!("expected a delta family, got {other:?}"),
        }
    }
}
