use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid root-law parameter: {0}")]
    Parameter(String),

    #[error("cannot parse model spec `{spec}`: {reason}")]
    ModelSpec { spec: String, reason: String },

    #[error("unknown alternative `{0}`")]
    UnknownAlternative(String),

    #[error("duplicate alternative `{0}`")]
    DuplicateAlternative(String),

    #[error("comparison matrices are defined over different alternative sets")]
    MismatchedAlternatives,

    #[error("comparison set differs: the partial order is only defined on a shared comparison set")]
    Incomparable,

    #[error("invalid comparison: {0}")]
    Comparison(String),

    #[error("invalid edit: {0}")]
    Edit(String),

    #[error("value {value} for pair ({a}, {b}) lies outside the support of {law}")]
    OutOfSupport {
        a: String,
        b: String,
        value: f64,
        law: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("comparison matrix has no compared pairs")]
    EmptyComparisons,

    #[error("comparison graph is disconnected; the unregularized estimator is not identifiable")]
    Disconnected,

    #[error("solver did not converge after {} iterations (gradient norm {:.3e})", .report.iterations, .report.final_gradient_norm)]
    Diverged { report: Box<SolveReport> },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let row = err
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        Error::Csv {
            row,
            message: err.to_string(),
        }
    }
}
