use std::fmt;

use armcmc::Error;

/// Exit codes. Stable: scripts may depend on them.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CERTIFICATE_VIOLATION: i32 = 3;
    pub const INADMISSIBLE_PARAMETER: i32 = 4;
    pub const IO: i32 = 5;
    pub const DEGENERATE_DIAGNOSTIC: i32 = 6;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io(_) => exit::IO,
            CliError::Core(e) => match e {
                Error::CertificateViolation(_) => exit::CERTIFICATE_VIOLATION,
                Error::InadmissibleParameter(_) => exit::INADMISSIBLE_PARAMETER,
                Error::DegenerateDiagnostic(_) => exit::DEGENERATE_DIAGNOSTIC,
                Error::InvalidInput(_) | Error::InvalidState(_) | Error::Domain { .. } => exit::USAGE,
                Error::DegenerateAnnulus { .. } | Error::Quadrature { .. } => exit::OTHER,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
