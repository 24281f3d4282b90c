use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QcError {
    /// Input outside the domain of an operation (zero quaternion, `h <= 0`, negative dilation, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation on the singular locus of a transform (Cayley pole, origin under inversion).
    #[error("singularity: {0}")]
    Singularity(String),

    /// A result violated an identity that must hold by construction; points at a convention bug.
    #[error("internal consistency violated: {0}")]
    Consistency(String),

    /// An integral did not reach the requested accuracy.
    #[error("accuracy failure: estimate {estimate} with error {error} after {cells} cells")]
    Accuracy {
        estimate: f64,
        error: f64,
        cells: usize,
    },

    /// An integrand does not decay fast enough to be integrable against the Haar measure.
    #[error("integrand not integrable: {0}")]
    NotIntegrable(String),

    /// A field was expected to be bi-radial about its chart but is not.
    #[error("field is not bi-radial: {0}")]
    NotBiRadial(String),

    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, QcError>;
