use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("batch normalization in training mode needs at least 2 rows, got {rows}")]
    DegenerateBatch { rows: usize },

    #[error("backward called without a forward cache for {0}")]
    MissingForwardCache(&'static str),

    #[error("requested {requested} negative pairs but only {available} non-edges exist")]
    ExhaustedSpace { requested: usize, available: usize },

    #[error("non-finite loss in term `{term}` at epoch {epoch}: {value}")]
    NonFiniteLoss {
        term: &'static str,
        epoch: usize,
        value: f64,
    },

    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    #[error("insufficient labels in partition {partition}: class {class} has {count} labeled nodes (need {needed})")]
    InsufficientLabels {
        partition: &'static str,
        class: &'static str,
        count: usize,
        needed: usize,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("model has not been trained")]
    UntrainedModel,

    #[error("schema mismatch in {file}: column {column}: {detail}")]
    SchemaMismatch {
        file: PathBuf,
        column: String,
        detail: String,
    },

    #[error("dangling edge in {file} at row {row}: unknown id `{id}`")]
    DanglingEdge { file: PathBuf, row: usize, id: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Stable machine-readable code, printed by the command-line runner.
    pub fn code(&self) -> &'static str {
        match self {
            Error::IndexOutOfRange { .. } => "E_INDEX",
            Error::DimensionMismatch { .. } => "E_DIM",
            Error::DegenerateBatch { .. } => "E_DEGENERATE_BATCH",
            Error::MissingForwardCache(_) => "E_NO_CACHE",
            Error::ExhaustedSpace { .. } => "E_EXHAUSTED",
            Error::NonFiniteLoss { .. } => "E_NONFINITE",
            Error::EmptyMask(_) => "E_EMPTY_MASK",
            Error::InsufficientLabels { .. } => "E_LABELS",
            Error::DegenerateInput(_) => "E_DEGENERATE_INPUT",
            Error::UntrainedModel => "E_UNTRAINED",
            Error::SchemaMismatch { .. } => "E_SCHEMA",
            Error::DanglingEdge { .. } => "E_DANGLING_EDGE",
            Error::InvalidConfig(_) => "E_CONFIG",
            Error::Io { .. } => "E_IO",
            Error::Csv(_) => "E_CSV",
            Error::Json(_) => "E_JSON",
            Error::Toml(_) => "E_TOML",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(context: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
