use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("knots and values differ in length ({knots} vs {values})")]
    LengthMismatch { knots: usize, values: usize },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("knots must be finite and strictly increasing (violated at index {0})")]
    NonIncreasingKnots(usize),
    #[error("function has no finite value")]
    NoFiniteValue,
    #[error("finite values are not contiguous (gap before index {0})")]
    NonContiguousDomain(usize),
    #[error("finite block is not convex at knot {index} (excess {excess:e})")]
    NotConvex { index: usize, excess: f64 },
    #[error("value at index {0} is -inf or NaN; only finite values and +inf are allowed")]
    ImproperValue(usize),
    #[error("theta grid must contain 0")]
    MissingZeroKnot,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid discrete measure: {0}")]
    InvalidMeasure(String),
    #[error("enumeration needs {count} compositions, cap is {cap}")]
    EnumerationTooLarge { count: f64, cap: f64 },
    #[error("no closed-form value for {0}")]
    UnsupportedClosedForm(String),
    #[error("model {0} has no closed-form cgf")]
    UnsupportedModel(String),
    #[error("model {0} is outside the classification table")]
    Unclassified(String),
    #[error("probe grid has no positive point")]
    EmptyProbeGrid,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for malformed input (files, specs, syntax) as opposed to numeric failures.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
