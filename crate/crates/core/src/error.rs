use thiserror::Error;

/// Errors raised by the verification engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown preset `{name}`; available: {available}")]
    UnknownPreset { name: String, available: String },

    #[error("preset `{preset}` rejected: {reason}")]
    PresetRejected { preset: String, reason: String },

    #[error("state diverged at step {step} (non-finite value)")]
    Divergence { step: usize },

    #[error("non-finite value in {term}")]
    NonFinite { term: String },

    #[error("coupling error: {0}")]
    Coupling(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("stability gate violated: {reason}; suggested dt <= {suggested_dt:e}")]
    Stability { reason: String, suggested_dt: f64 },

    #[error("density went negative ({value:e} at cell {cell})")]
    Negativity { cell: usize, value: f64 },

    #[error("jump map for `{preset}` is not monotone near x = {x}")]
    NonMonotoneJump { preset: String, x: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::NonFinite { .. }
                | Error::Stability { .. }
                | Error::Negativity { .. }
                | Error::NonMonotoneJump { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
