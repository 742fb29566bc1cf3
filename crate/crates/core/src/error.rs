use thiserror::Error;

/// Errors raised by the model, sampler, numerics and bound calculators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("degenerate annulus: proposal centre has radius {radius}")]
    DegenerateAnnulus { radius: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge on [{a}, {b}]: best estimate {best} with error {error}")]
    Quadrature { a: f64, b: f64, best: f64, error: f64 },

    #[error("certificate violation: {0}")]
    CertificateViolation(String),

    #[error("inadmissible parameter: {0}")]
    InadmissibleParameter(String),

    #[error("degenerate diagnostic: {0}")]
    DegenerateDiagnostic(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
