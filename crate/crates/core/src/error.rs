use thiserror::Error;

/// Errors raised across the library. Variants carry enough context for the
/// CLI to report the failing quantity and location.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {point:?} outside the declared domain")]
    DomainViolation { point: Vec<f64> },
    #[error("singular point: {what} (|value| = {magnitude:e})")]
    SingularPoint { what: String, magnitude: f64 },
    #[error("degenerate metric: det = {det:e}")]
    DegenerateMetric { det: f64 },
    #[error("immersion is not Lagrangian: {what} residual {residual:e}")]
    NonLagrangian { what: String, residual: f64 },
    #[error("cubic form vanishes identically")]
    DegenerateCubic,
    #[error("cubic form has the wrong symmetry type: {reason}")]
    WrongSymmetryType { reason: String },
    #[error("block kind {got} does not match case requirement {expected}")]
    BlockMismatch { expected: String, got: String },
    #[error("potential 1-form is not closed: path mismatch {mismatch:e}")]
    PotentialNotClosed { mismatch: f64 },
    #[error("building block {name} failed certification: {reason}")]
    CertificationFailed { name: String, reason: String },
    #[error("branch violation: {0}")]
    BranchViolation(String),
    #[error("insufficient stencil: {0}")]
    InsufficientStencil(String),
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e}){}", diagnostic.as_ref().map(|d| format!(": {d}")).unwrap_or_default())]
    NonConvergence {
        iterations: usize,
        residual: f64,
        diagnostic: Option<String>,
    },
    #[error("singular Jacobian at node ({i}, {j}): {reason}")]
    SingularJacobian { i: usize, j: usize, reason: String },
    #[error("singular gauge: {0}")]
    SingularGauge(String),
    #[error("frame invariant drift {drift:e} exceeds {limit:e} at node {node:?}")]
    InvariantDrift { drift: f64, limit: f64, node: Vec<usize> },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
