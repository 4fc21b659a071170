use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("density {value} lies outside [0, 1]")]
    Domain { value: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("double Riemann data C_l={c_l}, C_r={c_r} do not satisfy case {case}")]
    CaseMismatch {
        case: &'static str,
        c_l: f64,
        c_r: f64,
    },

    #[error(
        "convexity polynomial has {sign_changes} sign changes on (-eps, eps), expected exactly one"
    )]
    RootCount { sign_changes: usize },

    #[error("no sign change of the convexity polynomial on the bracket [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("quadrature failed to reach tolerance (estimate {estimate:e})")]
    Quadrature { estimate: f64 },

    #[error("step at t={time} rejected {attempts} times: density left [0, 1]")]
    StepRejected { time: f64, attempts: usize },

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config key `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Parameter(_)
                | Error::CaseMismatch { .. }
                | Error::ConfigParse { .. }
                | Error::ConfigValue { .. }
        )
    }
}
