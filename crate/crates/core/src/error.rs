use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge within {subdivisions} subdivisions (error estimate {estimate:e}, tolerance {tolerance:e})")]
    NonConvergence {
        subdivisions: usize,
        estimate: f64,
        tolerance: f64,
    },

    #[error("root is not bracketed: g({lo}) = {g_lo}, g({hi}) = {g_hi}")]
    BadBracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("function value is not finite at x = {x}")]
    NonFinite { x: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("diffusion is not ergodic: {0}")]
    NotErgodic(String),

    #[error("degenerate observation: {0}")]
    DegenerateObservation(String),

    #[error("statistic {value} is outside the range of the forward map")]
    OutOfRange { value: f64 },

    #[error("path blew up at step {step} (|X| = {value:e})")]
    NumericBlowup { step: usize, value: f64 },

    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
