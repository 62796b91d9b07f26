use std::io;

/// Errors surfaced by the library and the CLI layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid Young diagram {rows:?}: {reason}")]
    InvalidDiagram { rows: Vec<i64>, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,

    #[error("point {0:?} is not dominant (coordinates must be weakly decreasing)")]
    NonDominant(Vec<f64>),

    #[error("subdivision level must be at least 1 (use the level-0 enumeration instead)")]
    LevelZero,

    #[error("scattering has no centers")]
    EmptyScattering,

    #[error("need at least 2 centers, got {0}")]
    TooFewCenters(usize),

    #[error("exhaustive enumeration of {total} boxes exceeds the cap of {cap}")]
    OracleCapExceeded { total: i64, cap: i64 },

    #[error("neighbor expansion budget {budget} exhausted after {found} of {needed} candidates")]
    BudgetExhausted {
        budget: usize,
        found: usize,
        needed: usize,
    },

    #[error("non-finite query coordinate")]
    NonFinite,

    #[error("malformed center file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
