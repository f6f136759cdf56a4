use std::path::PathBuf;

/// Errors raised by the planning and simulation stack.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// |cos θ| fell below the singularity threshold of the ZYX Euler-rate map.
    #[error("singular attitude: pitch {pitch} rad is too close to ±π/2")]
    SingularAttitude { pitch: f64 },

    #[error("input sequence length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
