use std::path::PathBuf;

/// Errors raised anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state, iterate or sample became non-finite.
    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("insufficient replicates: need at least {needed}, got {got}")]
    InsufficientReplicates { needed: usize, got: usize },

    /// Every covariance eigenvalue is below tolerance yet the query point
    /// differs from the mean.
    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    /// The infinite-time GF risk diverges at the interpolation threshold.
    #[error("the infinite-time GF risk diverges at the interpolation threshold alpha = 1")]
    ThresholdDivergence,

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 for numerical divergence
    /// (including the threshold limit), 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence(_) | Error::ThresholdDivergence => 2,
            _ => 1,
        }
    }
}
