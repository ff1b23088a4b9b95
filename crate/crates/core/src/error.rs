use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A 3x3 matrix failed the rotation checks even under the loose tolerance.
    #[error("not a rotation: deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}")]
    NotARotation { deviation: f64, tolerance: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Adaptive quadrature for the matrix Fisher normalizer did not converge.
    #[error("quadrature did not converge for singular values {singular_values:?} (supported bound {bound})")]
    Quadrature { singular_values: [f64; 3], bound: f64 },

    #[error("record {id}: {source}")]
    Record {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("manifest: {0}")]
    Manifest(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
