use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-positive weight {weight} in equation {equation}")]
    NonPositiveWeight { equation: usize, weight: f64 },

    #[error("duplicate exponent {exponent:?} in equation {equation}")]
    DuplicateExponent { equation: usize, exponent: Vec<f64> },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("singular Jacobian (singular value ratio {ratio:.3e})")]
    SingularJacobian { ratio: f64 },

    #[error("Newton iteration diverged after {iterations} iterations")]
    Divergence { iterations: usize },

    #[error("step size stalled at t = {t}")]
    StepStall { t: f64 },

    #[error("certification lost at t = {t} (alpha/2 = {alpha_half:.3e})")]
    CertificationLost { t: f64, alpha_half: f64 },

    #[error("t = {t} outside path domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("bracket failure: {0}")]
    BracketFailure(String),

    #[error("monitor value {value:.6e} is not below the threshold {threshold:.6e} at the current time")]
    MonitorAboveThreshold { value: f64, threshold: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for failures of the numerical algorithms, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularJacobian { .. }
                | Error::Divergence { .. }
                | Error::StepStall { .. }
                | Error::CertificationLost { .. }
                | Error::BracketFailure(_)
                | Error::MonitorAboveThreshold { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
