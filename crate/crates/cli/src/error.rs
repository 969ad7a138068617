use plsgd_core::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidInput(_) | Error::PreconditionViolation(_) | Error::NonContractive { .. } => {
                CliError::Config(msg)
            }
            Error::Divergence { .. } => CliError::Divergence(msg),
            Error::NumericalFailure(_)
            | Error::InsufficientProbes { .. }
            | Error::NotInterpolated { .. }
            | Error::EnumerationTooLarge { .. } => CliError::Numerical(msg),
        }
    }
}

pub(crate) fn write_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("output.path: cannot write {}: {e}", path.display()))
}
