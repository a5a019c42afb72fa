use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Csv { line: u64, msg: String },

    #[error("{0}")]
    Config(String),

    #[error("checkpoint not found: {0}")]
    MissingCheckpoint(PathBuf),

    #[error("{0}")]
    Checkpoint(String),

    #[error("{0}")]
    Report(String),

    #[error(transparent)]
    Core(#[from] genf_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category used in the one-line error output.
    pub fn kind(&self) -> &'static str {
        use genf_core::Error as E;
        match self {
            CliError::Io { .. } => "io",
            CliError::Csv { .. } => "csv",
            CliError::Config(_) => "config",
            CliError::MissingCheckpoint(_) => "missing-checkpoint",
            CliError::Checkpoint(_) => "checkpoint",
            CliError::Report(_) => "report",
            CliError::Core(e) => match e {
                E::SyntheticWindow { .. } => "synthetic-window",
                E::Shape { .. } => "shape",
                E::InvalidArgument(_) => "invalid-argument",
                E::NonFinite(_) => "non-finite",
                E::MissingAtStart { .. } => "missing-at-start",
                E::TooFewSamples { .. } => "too-few-samples",
                E::TooFewUnits { .. } => "too-few-units",
                E::Unstable(_) => "unstable",
                E::EmptyDataset(_) => "empty-dataset",
                E::UnitLeakage(_) => "unit-leakage",
            },
        }
    }

    /// `error: <kind>: <message>` on a single line.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error: {}: {}", self.kind(), msg)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
