use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("ordering error: {u:?} is not below {v:?}")]
    Ordering { u: (usize, usize), v: (usize, usize) },

    #[error("range error: {0}")]
    Range(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("near-singular domain: delta = {delta:e} is below the supported minimum {min:e}")]
    NearSingular { delta: f64, min: f64 },

    #[error("tolerance not met after {subdivisions} subdivisions: estimate {estimate} with error {abs_err:e}")]
    ToleranceNotMet { estimate: f64, abs_err: f64, subdivisions: usize },

    #[error("numeric failure (seed {seed}): {msg}")]
    Numeric { seed: u64, msg: String },

    #[error("unsupported parity: M - N = {0} is odd")]
    UnsupportedParity(usize),

    #[error("conditioning error: {0}")]
    Conditioning(String),

    #[error("empty rigidity window: g_c(N) = {g} with N = {n}")]
    Window { g: f64, n: usize },

    #[error("budget error: {msg} (pilot acceptance estimate {pilot:e})")]
    Budget { pilot: f64, msg: String },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("parse error at `{key}`: {msg}")]
    Parse { key: String, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
