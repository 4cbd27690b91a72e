use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system specification: {0}")]
    InvalidSpec(String),
    #[error("vortices {i} and {j} collide (distance {distance:e})")]
    Collision { i: usize, j: usize, distance: f64 },
    #[error("state outside the admissible domain: {0}")]
    Domain(String),
    #[error("trajectory approached a collision near t = {t}")]
    CollisionApproach { t: f64 },
    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("zero vector has no projective class")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sample count {m} is not a multiple of particle count {n}")]
    GridMismatch { n: usize, m: usize },
    #[error("operation not applicable: {0}")]
    NotApplicable(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("target CP^(n-2) requires even n, got n = {0}")]
    OddN(usize),
    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tol:e}")]
    QuadratureFailure { estimate: f64, tol: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("coincident points on the circle (gap sum {0})")]
    DegenerateGap(f64),
    #[error("energy level {level} lies beyond the restricted extremum {extremum}")]
    LevelEmpty { level: f64, extremum: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Numerical failures (as opposed to domain or configuration errors).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepFailure { .. } | Error::NoConvergence { .. } | Error::QuadratureFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
