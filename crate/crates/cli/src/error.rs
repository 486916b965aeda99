use ebcd_core::{FitError, LinalgError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or unreadable input; exit code 2.
    #[error("{0}")]
    Input(String),
    /// The fit itself failed; exit code 3.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn io(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::InvalidOption(_)
            | FitError::RankTooLarge { .. }
            | FitError::PenaltyLength { .. }
            | FitError::BadLambda
            | FitError::MissingN
            | FitError::Linalg(LinalgError::ShapeMismatch { .. } | LinalgError::NonFinite | LinalgError::Empty) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        FitError::from(e).into()
    }
}
