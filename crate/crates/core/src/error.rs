use thiserror::Error;

/// Errors raised by validation, special functions, quadrature and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("threshold must be a positive integer, got {0}")]
    ThresholdNotInteger(f64),
    #[error("population too sparse for cooperation analysis: expected bacteria count {0} < 1")]
    PopulationTooSparse(f64),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("quadrature did not converge: best estimate {value:e}, error estimate {err_est:e}")]
    NoConvergence { value: f64, err_est: f64 },
    #[error("asymptotic response diverges without degradation (k = 0)")]
    DegradationRequired,
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("n = {n} exceeds the supported cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("invalid simulator configuration: {0}")]
    ConfigInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
