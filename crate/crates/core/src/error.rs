use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("phases unresolved")]
    PhasesUnresolved,

    #[error("window out of bounds: center {center}, {taps} taps, stream length {len}")]
    WindowOutOfBounds { center: usize, taps: usize, len: usize },

    #[error("covariance not PD")]
    NotPositiveDefinite,

    #[error("insufficient averaging: sample covariance is ill-conditioned")]
    InsufficientAveraging,

    #[error("singular matrix")]
    Singular,

    #[error("degenerate iterate: amplitude vector has zero norm")]
    DegenerateIterate,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("insufficient samples: need {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("imaginary residue {0:e} in a real-valued quantity")]
    ImaginaryResidue(f64),

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: &str) -> Error {
    Error::InvalidParameter(String::from(msg))
}
