use thiserror::Error;

#[derive(Debug, Error)]
pub enum SfaError {
    #[error("non-finite entry in {role} at ({row}, {col})")]
    NonFinite {
        role: &'static str,
        row: usize,
        col: usize,
    },

    #[error("eigensolver did not converge for {role}")]
    NoConvergence { role: &'static str },

    #[error("degenerate covariance: no eigenvalue above cutoff {epsilon:e} (lambda_max = {lambda_max:e})")]
    DegenerateCovariance { epsilon: f64, lambda_max: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("requested {requested} preprocessed dimensions but only {achievable} eigenvalues of the input covariance are above the floor")]
    UnachievableDimension { requested: usize, achievable: usize },

    #[error("component {index} has zero variance")]
    ZeroVariance { index: usize },

    #[error("only {available} components available, requested {requested}")]
    TooManyComponents { requested: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("logistic map left the unit interval at t = {t} (w = {value})")]
    UnitIntervalEscape { t: usize, value: f64 },

    #[error("model schema error: {0}")]
    Schema(String),

    #[error("unsupported version {found:?} of model document (expected {expected:?})")]
    UnsupportedVersion { found: String, expected: &'static str },

    #[error("csv format error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SfaError>;
