//! Crate-wide error type and exit-code mapping for the CLI.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid unit index {index} for a {rows}x{cols} grid")]
    InvalidUnit { index: usize, rows: usize, cols: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid bounds: component {component} has lower {lower} > upper {upper}")]
    InvalidBounds {
        component: usize,
        lower: f64,
        upper: f64,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("record {record}, variable '{variable}': unknown modality '{label}'")]
    SchemaViolation {
        record: usize,
        variable: String,
        label: String,
    },

    #[error("record {record}, variable '{variable}': missing value")]
    IncompleteRecord { record: usize, variable: String },

    #[error("modality '{label}' is never observed")]
    EmptyModality { label: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 0 success, 2 config error, 3 data error, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Plan(_)
            | Error::InvalidArgument(_)
            | Error::InvalidBounds { .. }
            | Error::InvalidUnit { .. }
            | Error::ShapeMismatch(_) => 2,
            Error::SchemaViolation { .. }
            | Error::IncompleteRecord { .. }
            | Error::EmptyModality { .. }
            | Error::Data(_)
            | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}
