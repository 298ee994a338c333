use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument outside the domain of {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("{routine} did not converge within {iterations} iterations")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error("failed to read CSV input: {0}")]
    Csv(String),

    #[error("column {0} not found in CSV header")]
    UnknownColumn(String),

    #[error("column contains no numeric rows")]
    EmptyColumn,

    #[error("non-numeric cell {value:?} at data row {row}")]
    NonNumericCell { row: usize, value: String },

    #[error("non-finite value at data row {row}")]
    NonFiniteValue { row: usize },

    #[error("sample has {n} points; at least {min} are required")]
    TooFewPoints { n: usize, min: usize },

    #[error("sample contains ties; use the ties estimator")]
    TiesPresent,

    #[error("sample has zero spread (all values equal)")]
    ZeroSpread,

    #[error("polynomial degree {0} outside the supported range 2..=7")]
    DegreeOutOfRange(usize),

    #[error("spline dimension {0} outside the supported range 2..=12")]
    DimensionOutOfRange(usize),

    #[error("{n} observations are not enough for a basis with {required} rows minimum")]
    InsufficientData { n: usize, required: usize },

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("length mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("no candidate model satisfies the nonnegative-derivative constraint")]
    NoFeasibleModel,

    #[error("invalid mixture specification: {0}")]
    BadSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        function,
        detail: detail.into(),
    }
}
