use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    ParseNumber {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column '{column}': unknown category '{value}'")]
    UnknownCategory {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: missing label")]
    MissingLabel { row: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("labels are constant; cannot normalize")]
    ConstantLabels,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("logistic model needs at least two distinct classes")]
    SingleClass,

    #[error("objective became non-finite during fitting")]
    NonFinite,

    #[error("no patterns generated")]
    NoPatterns,

    #[error("no support found")]
    NoSupport,

    #[error("task not supported: {0}")]
    UnsupportedTask(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("model file, section [{section}]: {message}")]
    ModelFormat { section: String, message: String },

    #[error("model file format version {found} is newer than supported version {supported}")]
    UnsupportedVersion { found: u32, supported: u32 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(section: &str, message: impl Into<String>) -> Self {
        Error::ModelFormat {
            section: section.to_string(),
            message: message.into(),
        }
    }
}
