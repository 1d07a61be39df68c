use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("depth mismatch: expected {expected} levels, got {got}")]
    DepthMismatch { expected: usize, got: usize },

    #[error("non-finite value {value} at index {index} in {what}")]
    NonFinite {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("objects live on different product spaces")]
    SpaceMismatch,

    #[error("level {level} out of range 1..={depth}")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("observable reads level {declared} but level {level} was requested")]
    ObservableTooDeep { declared: usize, level: usize },

    #[error("observable varies below its declared level {declared}")]
    ObservableDeclaration { declared: usize },

    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probability vector sums to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("target count {value} is not an integer at {location}")]
    NonIntegerTarget { value: f64, location: String },

    #[error("infeasible targets: {0}")]
    Infeasible(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
