use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside schedule span [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },

    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("degenerate spectrum at t = {t}: levels ({}, {}) separated by {gap:e}", pair.0, pair.1)]
    Degeneracy { t: f64, pair: (usize, usize), gap: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("second-order phase rate fixed point did not converge at t = {t}")]
    Convergence { t: f64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("precondition unmet: {0}")]
    Precondition(String),

    #[error("pole in series at t = {t}; total variation undefined")]
    Pole { t: f64 },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario `{scenario}`, task `{task}`: {source}")]
    Task {
        scenario: String,
        task: String,
        #[source]
        source: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), reason: reason.into() }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Integration { .. } | Error::Convergence { .. } => 3,
            Error::Degeneracy { .. } => 4,
            Error::Io { .. } => 1,
            Error::Task { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
