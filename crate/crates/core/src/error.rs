use thiserror::Error;

/// Errors raised by grid construction, state preparation and propagation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("box too small: {what} needs an extent of at least {required:.1} a.u., grid offers {available:.1} a.u.")]
    BoxTooSmall {
        what: String,
        required: f64,
        available: f64,
    },

    #[error("input states are not orthogonal (|overlap| = {0:.3e})")]
    NotOrthogonal(f64),

    #[error("numerical abort at t = {time:.6} a.u.: {reason} (max |psi| = {max_amplitude:.3e})")]
    NumericalAbort {
        time: f64,
        reason: String,
        max_amplitude: f64,
    },

    #[error("boundary density {density:.3e} exceeds {limit:.1e} at t = {time:.6} a.u.")]
    BoundaryLeak { time: f64, density: f64, limit: f64 },

    #[error(
        "relaxation did not converge after {iterations} iterations (last |dE| = {last_delta:.3e})"
    )]
    NotConverged { iterations: usize, last_delta: f64 },

    #[error("rank-deficient fit: {0}")]
    RankDeficient(String),

    #[error("{failed} of {total} scan cells failed: {details}")]
    PartialScan {
        failed: usize,
        total: usize,
        details: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
