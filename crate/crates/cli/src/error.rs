//! Errors and their process exit codes.

use std::fmt;

use toric_credit::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad command line; exit 64.
    Usage(String),
    /// Config or input rejected; exit 2.
    Validation(String),
    /// A solver or integrator failed; exit 3.
    Numeric(String),
    /// Output could not be written; exit 74.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 74,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::Domain(_)
            | Error::NotInterior { .. }
            | Error::Capacity { .. }
            | Error::DegenerateTranche(_) => CliError::Validation(e.to_string()),
            Error::Budget { .. } | Error::Bracket { .. } | Error::Range { .. } | Error::Numeric(_) => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}
