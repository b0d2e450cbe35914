use std::path::PathBuf;

/// Errors raised by the estimation pipeline and its file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error in {path} at {location}: {message}")]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("mode {index} is overdamped (zeta = {zeta}); only underdamped modes can be synthesized")]
    Overdamped { index: usize, zeta: f64 },

    #[error("numerator matrix R for output {output} is not positive definite")]
    SingularNumerator { output: usize },

    #[error("order {order} system is numerically singular (reciprocal condition estimate {rcond:.3e})")]
    SingularSystem { order: usize, rcond: f64 },

    #[error("companion QR iteration did not converge after {iterations} iterations (degree {degree})")]
    NoConvergence { degree: usize, iterations: usize },

    #[error("root at z = 0 has no continuous-time pole")]
    ZeroRoot,

    #[error("zero residual passed to atom selection")]
    ZeroResidual,

    #[error("root {root} is (nearly) multiple: |dA/dz| = {derivative:.3e}")]
    NearMultipleRoot { root: String, derivative: f64 },

    #[error("zero mode-shape vector at column {0}")]
    ZeroVector(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            location: location.into(),
            message: message.into(),
        }
    }
}
