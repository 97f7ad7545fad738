use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "truncation error: cutoff {cutoff} keeps norm {achieved:.9} (< 1 - {tolerance:e}); raise the cutoff"
    )]
    Truncation { cutoff: usize, achieved: f64, tolerance: f64 },

    #[error(
        "evolution aborted at step {step} (t = {time}): trace drift {drift:.3e} exceeds tolerance {tolerance:.1e}; raise the cutoffs or lower dt"
    )]
    TraceDrift { step: usize, time: f64, drift: f64, tolerance: f64 },

    #[error("undefined observable: {0}")]
    UndefinedObservable(String),

    #[error("unknown scenario '{name}'; valid names: {valid}")]
    NotFound { name: String, valid: String },

    /// `line` is 1-based; 0 when the problem is not tied to one line.
    #[error("config error{}: {message}", at_line(*line))]
    Config { line: usize, message: String },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn at_line(line: usize) -> String {
    if line == 0 { String::new() } else { format!(" at line {line}") }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
