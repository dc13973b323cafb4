use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator.
///
/// [`Error::is_config`] separates user-input problems (bad parameters,
/// malformed config documents) from runtime failures; the CLI maps the two
/// classes onto different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("config document could not be parsed: {0}")]
    Parse(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("moments are undefined for a field with zero norm")]
    UndefinedMoments,

    #[error("insufficient tail on the {side} side: {found} samples in the fit window, need {needed}")]
    InsufficientTail {
        side: &'static str,
        found: usize,
        needed: usize,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("malformed data in {path}: {message}")]
    Data { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by invalid user input rather than by the run itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parse(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Non-fatal conditions noticed while building or evolving a field.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Spike width below two grid spacings.
    UnderResolvedSpikes { spike_width: f64, dx: f64 },
    /// Intensity near the periodic boundary exceeded the leak threshold.
    BoundaryLeak { step: usize, z: f64, leak: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::UnderResolvedSpikes { spike_width, dx } => write!(
                f,
                "spike width {spike_width} is under-resolved by grid spacing {dx} (need width >= 2 dx)"
            ),
            Warning::BoundaryLeak { step, z, leak } => write!(
                f,
                "boundary leak {leak:.3e} of peak at step {step} (z = {z}); periodic wraparound may distort results"
            ),
        }
    }
}
