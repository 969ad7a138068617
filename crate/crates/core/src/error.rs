use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("insufficient probes: {qualifying} of {total} probes lie above the loss floor {floor:e}")]
    InsufficientProbes {
        qualifying: usize,
        total: usize,
        floor: f64,
    },

    #[error("targets are not interpolated: range residual {residual:e} exceeds {tolerance:e}")]
    NotInterpolated { residual: f64, tolerance: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("non-contractive configuration: factor {factor} lies outside {range}")]
    NonContractive { factor: f64, range: &'static str },

    #[error("run {run} diverged at step {step}: loss {loss:e}")]
    Divergence { run: usize, step: usize, loss: f64 },

    #[error("enumeration of {outcomes} batches exceeds the budget of {budget}")]
    EnumerationTooLarge { outcomes: u128, budget: u128 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
