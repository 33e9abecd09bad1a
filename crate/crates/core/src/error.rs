use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Numerical outcomes that are part of the method (a sequence that does not
/// settle, an inconclusive classification) are values, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid needle: {0}")]
    InvalidNeedle(String),
    #[error("point is within mesh tolerance of a surface (signed distance {0:.3e})")]
    AmbiguousPoint(f64),
    #[error("singular point: evaluation at the source location")]
    SingularPoint,
    #[error("point at distance {distance:.3e} is closer than the exclusion radius {limit:.3e} to a surface")]
    NearSurface { distance: f64, limit: f64 },
    #[error("system is ill-conditioned (condition estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("point must lie in the shell between the spheres")]
    OutsideShell,
    #[error("series tail bound {bound:.3e} exceeds tolerance {tol:.3e}")]
    TailTooLarge { bound: f64, tol: f64 },
    #[error("trace length {got} does not match basis dimension {expected}")]
    BasisMismatch { expected: usize, got: usize },
    #[error("mesh fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("domains differ: {0}")]
    DomainMismatch(String),
    #[error("nesting violated: {0}")]
    NestingViolation(String),
    #[error("needle continuation could not be placed: {0}")]
    PolePlacementFailure(String),
    #[error("sequence did not settle: {0}")]
    NotConverged(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
