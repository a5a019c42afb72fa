use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: String,
        got: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("unit {unit}: feature {feature} has no observation at t=0")]
    MissingAtStart { unit: String, feature: String },
    #[error("need more samples than neighbours: n={n}, k={k}")]
    TooFewSamples { n: usize, k: usize },
    #[error("need at least {needed} units, got {got}")]
    TooFewUnits { needed: usize, got: usize },
    #[error("synthetic window L={l} must be smaller than horizon N={n}")]
    SyntheticWindow { l: usize, n: usize },
    #[error("process is not stationary (spectral radius estimate {0:.6})")]
    Unstable(f64),
    #[error("unit {0} appears in both training and test data")]
    UnitLeakage(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(context: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Shape {
            context,
            expected: expected.into(),
            got: got.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
