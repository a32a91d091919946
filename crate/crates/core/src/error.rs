//! Error type shared by every module of the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of model construction, simulation and test evaluation.
///
/// The CLI maps `InvalidConfig`/`InvalidModel`/`Domain` to its
/// configuration-error exit code and everything else to the scientific
/// failure code, so keep that split in mind when adding variants.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A function argument left the mathematical domain (e.g. a quantile
    /// level outside (0,1) or a density evaluated off its support).
    #[error("domain error: {0}")]
    Domain(String),

    /// A model object violates one of its structural invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An experiment or run configuration is inconsistent or inadmissible.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation that needs at least one exceedance saw none.
    #[error("no exceedances: {0}")]
    NoExceedances(String),

    /// A statistic could not be evaluated at the given data (e.g. a
    /// log-likelihood term with nonpositive density).
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Adaptive quadrature hit its depth limit before reaching the
    /// requested tolerance; `best` is the deepest refined estimate.
    #[error("quadrature did not converge (best estimate {best:e})")]
    QuadratureNoConvergence { best: f64 },
}
