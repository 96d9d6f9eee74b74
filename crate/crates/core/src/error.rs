use thiserror::Error;

use crate::glm::FitResult;

/// Errors produced by table construction, model building, fitting and estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("degenerate table: {0}")]
    DegenerateTable(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("IRLS did not converge after {iterations} iterations (deviance {deviance})")]
    NoConvergence {
        iterations: usize,
        deviance: f64,
        /// Last iterate, for diagnostics.
        last: Box<FitResult>,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
}

pub type Result<T> = std::result::Result<T, Error>;
