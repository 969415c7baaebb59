use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("direction {0:?} lies on the polarisation axis")]
    AxisSingularity([f64; 3]),

    #[error("profile evaluated at k = 0")]
    PointSingularity,

    #[error("pairing not absolutely integrable: combined small-k exponent {exponent} <= -3")]
    NonIntegrablePairing { exponent: f64 },

    #[error("quadrature error estimate {estimate:e} above target {target:e} (value {value})")]
    ToleranceNotMet {
        value: num_complex::Complex64,
        estimate: f64,
        target: f64,
    },

    #[error("declared support is not contained in the forward lightcone")]
    SupportNotInForwardCone,

    #[error("support precondition violated: {0}")]
    SupportPrecondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid resolution failure: {0}")]
    Resolution(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
