use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("backend mismatch: {0}")]
    BackendMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("unknown generator `{name}` at byte {position}")]
    UnknownGenerator { name: String, position: usize },

    #[error("invalid group table: {0}")]
    InvalidGroup(String),

    #[error("invalid subgroup set: {0}")]
    InvalidSubgroup(String),

    #[error("group order {order} exceeds enumeration cap {cap}")]
    OrderCapExceeded { order: usize, cap: usize },

    #[error("grid size {got} too small; need at least {required} to avoid aliasing")]
    GridTooSmall { required: usize, got: usize },

    #[error("symbol is singular at grid point {point:?} (min singular value {sigma:.3e})")]
    SymbolSingular { point: Vec<usize>, sigma: f64 },

    #[error("operator is not injective on the grid proxy; no approximate left inverse")]
    NotInjective,

    #[error(
        "window too small: discarded mass fraction {fraction:.3e} exceeds limit {limit:.3e}"
    )]
    WindowTooSmall { fraction: f64, limit: f64 },

    #[error("measure not usable here: {0}")]
    MeasureUnsupported(String),

    #[error("no witness exists: the measure is the point mass at 0")]
    NoWitness,

    #[error("predicate closure violated: {0}")]
    PredicateClosureViolation(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("iteration did not converge within {maxiter} steps (last step {last_step:.3e})")]
    MaxIterExceeded { maxiter: usize, last_step: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
