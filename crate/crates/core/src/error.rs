use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A task or frame violates one of its invariants; the payload names it.
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("insufficient history: series length {len}, required {required}")]
    InsufficientHistory { len: usize, required: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("metric {metric} undefined: {reason}")]
    UndefinedMetric { metric: String, reason: String },

    #[error("invalid seasonal period {period} for context length {len}")]
    InvalidPeriod { period: usize, len: usize },

    #[error("multiplicative model requires strictly positive data")]
    NonPositiveData,

    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),

    #[error("estimation system is rank-deficient")]
    SingularFit,

    #[error("optimizer did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("forecast produced non-finite values")]
    NonFinite,

    #[error("no hyperparameter assignment completed for model {model}")]
    AllAssignmentsFailed { model: String },

    #[error("unknown model: {0}")]
    UnknownModel(String),

    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse {
        line: u64,
        column: String,
        reason: String,
    },

    #[error("timestamps not strictly increasing at line {line}")]
    NonMonotonicTimestamps { line: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("adapter timed out after {seconds:.1}s")]
    AdapterTimeout { seconds: f64 },

    #[error("adapter exited (code {code:?}): {stderr}")]
    AdapterCrash { code: Option<i32>, stderr: String },

    #[error("malformed adapter response: {0}")]
    MalformedResponse(String),

    /// The adapter answered with an explicit error record.
    #[error("adapter error {code}: {message}")]
    AdapterReported { code: String, message: String },

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn undefined(metric: &str, reason: impl Into<String>) -> Self {
        Error::UndefinedMetric {
            metric: metric.to_string(),
            reason: reason.into(),
        }
    }

    /// Short, stable name used in audit logs and failure records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema(_) => "SchemaError",
            Error::InsufficientHistory { .. } => "InsufficientHistory",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::UndefinedMetric { .. } => "UndefinedMetric",
            Error::InvalidPeriod { .. } => "InvalidPeriod",
            Error::NonPositiveData => "NonPositiveData",
            Error::InvalidParams(_) => "InvalidParams",
            Error::SingularFit => "SingularFit",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::NonFinite => "NonFinite",
            Error::AllAssignmentsFailed { .. } => "AllAssignmentsFailed",
            Error::UnknownModel(_) => "UnknownModel",
            Error::Parse { .. } => "ParseError",
            Error::NonMonotonicTimestamps { .. } => "NonMonotonicTimestamps",
            Error::Io { .. } => "IoError",
            Error::Json(_) => "JsonError",
            Error::Csv(_) => "CsvError",
            Error::AdapterTimeout { .. } => "AdapterTimeout",
            Error::AdapterCrash { .. } => "AdapterCrash",
            Error::MalformedResponse(_) => "MalformedResponse",
            Error::AdapterReported { .. } => "AdapterError",
            Error::Usage(_) => "UsageError",
        }
    }
}
