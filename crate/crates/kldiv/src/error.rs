use thiserror::Error;

/// Which neighbor distance a zero-distance failure refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceSide {
    /// Distance within the query's own sample (self excluded).
    WithinSample,
    /// Distance from a query sample into the reference sample.
    CrossSample,
}

impl std::fmt::Display for DistanceSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DistanceSide::WithinSample => write!(f, "within-sample"),
            DistanceSide::CrossSample => write!(f, "cross-sample"),
        }
    }
}

/// Error type for all library operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{func}: argument must be positive, got {value}")]
    NonPositive { func: &'static str, value: f64 },

    #[error("dimension must be in 1..={max}, got {dim}")]
    DimensionOutOfRange { dim: usize, max: usize },

    #[error("sample set must contain at least one point")]
    EmptySampleSet,

    #[error("point {index} has dimension {got}, expected {expected}")]
    InconsistentDimension { index: usize, expected: usize, got: usize },

    #[error("coordinate {coord} of point {index} is not finite")]
    NonFiniteCoordinate { index: usize, coord: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("index {index} out of bounds for {len} points")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("k={k} out of range: only {available} candidate points")]
    KOutOfRange { k: usize, available: usize },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("zero {side} k-th neighbor distance at sample index {index} under the error policy")]
    ZeroDistance { index: usize, side: DistanceSide },

    #[error("query point is not a member of the sample set")]
    QueryNotInSet,

    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    #[error("spec parse error: {0}")]
    SpecParse(String),

    #[error("no closed-form divergence for this pair: {0}")]
    NotClosedForm(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("quadrature supports d=1 only, got d={0}")]
    QuadratureUnsupported(usize),

    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),

    #[error("regression input: {0}")]
    RegressionInput(String),

    #[error("degenerate summary at n={n}: {what}")]
    DegenerateSummary { n: usize, what: String },

    #[error("csv parse error at line {line}: {msg}")]
    CsvParse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
