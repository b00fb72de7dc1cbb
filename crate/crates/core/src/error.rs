use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("label {label} out of range for alphabet size {k}")]
    LabelOutOfRange { label: usize, k: usize },

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("label space too large: {size} sequences exceeds limit {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },

    #[error("dual solver did not reach tolerance within {updates} pair updates")]
    QpIterationCap { updates: usize },

    #[error("infeasible multipliers: {0}")]
    InfeasibleAlpha(String),

    #[error("no labeled samples in target dataset")]
    NoLabeledSamples,

    #[error("sample {index} has no labels")]
    UnlabeledSample { index: usize },

    #[error("working set already contains this joint labeling")]
    DuplicateConstraint,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
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

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
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
