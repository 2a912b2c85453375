use std::path::PathBuf;

/// Errors produced by the core library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid task parameters: {0}")]
    InvalidParams(String),

    #[error("invalid solver spec: {0}")]
    InvalidSolver(String),

    #[error("invalid action")]
    InvalidAction,

    #[error("no action at terminal state")]
    TerminalState,

    #[error("need at least {required} episodes, got {got}")]
    TooFewEpisodes { required: usize, got: usize },

    #[error("degenerate reward range")]
    DegenerateRange,

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("feature schema mismatch: expected {expected:?}, got {got:?}")]
    SchemaMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },

    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("experiment {0} needs a surrogate model or a training grid")]
    MissingSurrogate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for errors caused by bad user input (configs, files, arguments)
    /// rather than a failure while running.
    pub fn is_config_error(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::InvalidAction | Error::TerminalState | Error::DegenerateRange
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
