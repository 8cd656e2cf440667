use std::path::PathBuf;

use thiserror::Error;

/// Which metric axiom a distance matrix violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricViolation {
    NotSquare,
    NonFinite,
    NonzeroDiagonal,
    Asymmetric,
    ZeroDistance,
    Triangle,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric_space: points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),

    #[error("metric_space: not a metric ({kind:?}) at witness {witness:?}")]
    NotAMetric {
        kind: MetricViolation,
        witness: Vec<usize>,
    },

    #[error("metric_space: empty point set")]
    EmptySpace,

    #[error("metric_space: need at least {needed} points, have {have}")]
    TooFewPoints { needed: usize, have: usize },

    #[error("metric_space: {0}")]
    InvalidInput(String),

    #[error("covering: {n} points exceed the exact limit {limit}; use greedy nets")]
    TooLarge { n: usize, limit: usize },

    #[error("covering: radius must be positive and finite, got {0}")]
    InvalidRadius(f64),

    #[error("covering: empty radius grid")]
    EmptyGrid,

    #[error("chaining: degenerate space (zero diameter)")]
    DegenerateSpace,

    #[error("chaining: level {level} outside [{lo}, {hi}]")]
    LevelOutOfRange { level: i32, lo: i32, hi: i32 },

    #[error("pair_reduction: {0}")]
    BadParameters(String),

    #[error("pair_reduction: no value for point {0}")]
    MissingValue(usize),

    #[error("bounds: delta must be positive and finite, got {0}")]
    InvalidDelta(f64),

    #[error("bounds: empty level range n={n} >= n1={n1}")]
    EmptyRange { n: i32, n1: i32 },

    #[error("bounds: invalid levels n={n}, n1={n1}")]
    InvalidLevels { n: i32, n1: i32 },

    #[error("bounds: C*2^((k0+1)t) = {0} < 1, logarithm factor undefined")]
    NonconvergentLog(f64),

    #[error("bounds: series did not converge within {0} terms")]
    SeriesNotConverged(usize),

    #[error("bounds: delta {delta} below minimal gap {min_gap}; the strict-pair set is empty")]
    TrivialCase { delta: f64, min_gap: f64 },

    #[error("parameters violate hypotheses: {0}")]
    ParamViolation(String),

    #[error("simulate: covariance factorization failed after jitter {0:e}")]
    FactorizationFailure(f64),

    #[error("simulate: {0}")]
    Simulation(String),

    #[error("verify: moment order must be 2, got {0}")]
    WrongOrder(f64),

    #[error("verify: {0}")]
    Verification(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 input errors, 3 numeric errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonconvergentLog(_)
            | Error::SeriesNotConverged(_)
            | Error::FactorizationFailure(_) => 3,
            _ => 2,
        }
    }
}
