//! Error type shared by every module of the solver.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    /// A caller-supplied value is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A point has the wrong number of coordinates for the domain.
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A path failed to terminate within the configured step cap.
    #[error("path exceeded {0} steps without terminating; the domain may be malformed or dt far too small")]
    RunawayPath(u64),

    /// The operation is not defined for this kind of domain.
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    /// The requested name is not in the benchmark catalog.
    #[error("unknown benchmark \"{0}\" (expected one of: square_parabolic, square_elliptic, cube_parabolic, cube_elliptic)")]
    UnknownBenchmark(String),

    /// A job configuration failed validation; the payload lists one
    /// violation per line.
    #[error("invalid job configuration:\n{0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SolverError>;
