use thiserror::Error;

/// Errors raised anywhere in the band pipeline.
#[derive(Debug, Error)]
pub enum ScbError {
    #[error("sample contains no curves")]
    EmptySample,

    #[error("operation needs at least {needed} curves, sample has {got}")]
    TooFewCurves { needed: usize, got: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid axis {axis} has {len} points, at least {needed} required")]
    GridTooShort { axis: usize, len: usize, needed: usize },

    #[error("grids of the two inputs do not match")]
    GridMismatch,

    #[error("pointwise standard deviation vanishes at grid index {index}")]
    DegenerateVariance { index: usize },

    #[error("invalid LKC or density request: {0}")]
    InvalidDensity(String),

    #[error("no tail solution of EEC(u) = alpha/2 for alpha = {alpha}: {reason}")]
    NoSolution { alpha: f64, reason: String },

    #[error("expected Euler characteristic is not finite at u = {u}")]
    NonFiniteEec { u: f64 },

    #[error("{rejected} degenerate bootstrap resamples exceed the limit for {replicates} replicates")]
    TooManyDegenerateResamples { rejected: usize, replicates: usize },

    #[error("covariance input is not a valid correlation matrix: {0}")]
    InvalidCovariance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ScbError {
    /// Stable machine-readable tag, used for error JSON on the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            ScbError::EmptySample => "empty_sample",
            ScbError::TooFewCurves { .. } => "too_few_curves",
            ScbError::NonFinite { .. } => "non_finite",
            ScbError::InvalidGrid(_) => "invalid_grid",
            ScbError::GridTooShort { .. } => "grid_too_short",
            ScbError::GridMismatch => "grid_mismatch",
            ScbError::DegenerateVariance { .. } => "degenerate_variance",
            ScbError::InvalidDensity(_) => "invalid_density",
            ScbError::NoSolution { .. } => "no_solution",
            ScbError::NonFiniteEec { .. } => "non_finite_eec",
            ScbError::TooManyDegenerateResamples { .. } => "degenerate_resamples",
            ScbError::InvalidCovariance(_) => "invalid_covariance",
            ScbError::InvalidArgument(_) => "invalid_argument",
            ScbError::Parse { .. } => "parse",
            ScbError::Io(_) => "io",
            ScbError::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, ScbError>;
