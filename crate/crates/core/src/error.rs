use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// `kind()` yields a stable lowercase tag used by the CLI for its one-line
/// machine-parsable error output.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Parameter(String),

    #[error("{0}")]
    Contract(String),

    #[error("{0}")]
    Evaluation(String),

    #[error("join: {0}")]
    Join(String),

    #[error("{0}")]
    UndefinedMetric(String),

    #[error("all ensemble weights are zero after clipping")]
    DegenerateWeights,

    #[error("{}:{line}: {message}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("score {value} for '{id}' is outside [0, 1]")]
    Range { id: String, value: f64 },

    #[error("duplicate pair id '{0}'")]
    Duplicate(String),

    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Config(_) => "config",
            Error::Parameter(_) => "parameter",
            Error::Contract(_) => "contract",
            Error::Evaluation(_) => "evaluation",
            Error::Join(_) => "join",
            Error::UndefinedMetric(_) => "undefined-metric",
            Error::DegenerateWeights => "degenerate-weights",
            Error::Parse { .. } => "parse",
            Error::Range { .. } => "range",
            Error::Duplicate(_) => "duplicate",
            Error::NonFinite { .. } => "non-finite",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn dim(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::Dimension {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
