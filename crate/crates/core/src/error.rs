use thiserror::Error;

/// Errors raised by model fitting, the flip engine and the baselines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model data: {0}")]
    InvalidData(String),

    #[error("fitted mean {mu} at index {index} lies on the boundary of the mean space")]
    Boundary { index: usize, mu: f64 },

    #[error("design is rank deficient (Z'WZ is singular)")]
    SingularDesign,

    #[error("tested column {column} lies in the span of the nuisance design")]
    DegenerateContrast { column: usize },

    #[error("score variance is degenerate ({variance:e})")]
    DegenerateVariance { variance: f64 },

    #[error("invalid flip plan: {0}")]
    InvalidPlan(String),

    #[error("IRLS did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("sandwich bread matrix is singular")]
    SingularBread,

    #[error("index {index} out of range for {len} columns")]
    ColumnOutOfRange { index: usize, len: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
