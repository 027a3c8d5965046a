use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("expected {expected} interior values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("operator is not positive: quadratic form {form:e} for (y, y) = {norm_sq:e}")]
    OperatorNotPositive { form: f64, norm_sq: f64 },

    #[error("shift parameter must be nonnegative, got {0}")]
    NegativeShift(f64),

    #[error("{what} did not converge after {iterations} iterations (last estimate {last:e})")]
    NotConverged { what: &'static str, iterations: usize, last: f64 },

    #[error("three-level step requires the previous level")]
    MissingHistory,

    #[error("unsupported problem: {0}")]
    UnsupportedProblem(String),

    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),

    #[error("solution blew up at level {level} (t = {time})")]
    BlowUp { level: usize, time: f64 },
}
