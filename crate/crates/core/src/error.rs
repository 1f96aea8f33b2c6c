use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver, the simulators and the reporting layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A parameter lies outside the mathematical domain of a formula
    /// (for example a divergent mean jump size).
    #[error("domain error: {0}")]
    Domain(String),

    /// The discretization cannot represent the requested problem accurately.
    #[error("numerical resolution error: {0}")]
    Resolution(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    /// The outer one-dimensional search did not bracket a maximum.
    /// `profile` holds every `(W', objective)` pair that was evaluated.
    #[error("outer search failed: {message}")]
    Bracket {
        message: String,
        profile: Vec<(f64, f64)>,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// `2` configuration, `3` data or file format, `4` numerical, `1` anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Argument(_) => 2,
            Error::Format(_) | Error::Data(_) | Error::Io { .. } => 3,
            Error::Domain(_) | Error::Resolution(_) | Error::Bracket { .. } => 4,
        }
    }
}
