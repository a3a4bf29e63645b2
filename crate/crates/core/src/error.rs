use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Every restart of the hyperparameter search produced a non-finite
    /// negative log marginal likelihood.
    #[error("GP fitting failed after {restarts} restarts: {diagnostics}")]
    FittingFailed { restarts: usize, diagnostics: String },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("optimiser failed: {0}")]
    Optimizer(String),

    #[error("steps-ahead plan collapsed: rows {first} and {second} coincide")]
    DegeneratePlan { first: usize, second: usize },

    /// The black-box objective failed; the partial run is carried along.
    #[error("objective evaluation failed at iteration {iteration}: {message}")]
    Objective {
        iteration: usize,
        message: String,
        history: Box<crate::glasses::RunHistory>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
