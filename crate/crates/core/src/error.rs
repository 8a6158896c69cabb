use thiserror::Error;

/// Errors raised by the spectral routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure in {context}: {detail}")]
    NumericFailure { context: &'static str, detail: String },

    /// No candidate perturbation produced a generic operator.
    #[error(
        "search failure: {tried} candidates rejected, smallest open gap seen {smallest_gap:e} (gap_tol {gap_tol:e})"
    )]
    SearchFailure {
        tried: usize,
        smallest_gap: f64,
        gap_tol: f64,
    },

    #[error("matrix is not elliptic (trace {trace})")]
    NotElliptic { trace: f64 },

    #[error("energy {energy} is not inside a band interior (margin {margin:e})")]
    EdgeSingularity { energy: f64, margin: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
