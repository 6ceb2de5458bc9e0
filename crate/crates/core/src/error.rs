use thiserror::Error;

/// Errors raised by the recovery pipeline and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("degenerate fit: s_min(G) = {s_min:e} is below the rank tolerance {tolerance:e}")]
    Degenerate { s_min: f64, tolerance: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
