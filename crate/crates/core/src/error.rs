use thiserror::Error;

/// Errors produced by the masked-prediction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on shapes, channel counts or divisibility was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Normalization statistics are unusable (non-positive standard deviation).
    #[error("invalid statistics: {0}")]
    InvalidStats(String),

    /// The mask sampler gave up before reaching the requested ratio.
    #[error("mask generation stopped at ratio {achieved:.6} below target {target:.6}")]
    PartialMask { achieved: f64, target: f64 },

    /// A file did not match its documented layout.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn format_err(offset: u64, msg: impl Into<String>) -> Error {
    Error::Format {
        offset,
        message: msg.into(),
    }
}
