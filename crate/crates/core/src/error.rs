use std::fmt;

/// Errors surfaced by the tracking toolkit.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An observation or feature value was NaN or infinite.
    NonFiniteInput { what: &'static str },
    /// Feature vectors of different dimensions were mixed.
    DimensionMismatch { expected: usize, got: usize },
    /// An operation requiring data was called on an empty collection.
    EmptyInput { what: &'static str },
    /// A parameter was outside its valid range.
    InvalidParameter { what: &'static str, reason: String },
    /// A sample without a discretized label was offered to the auxiliary buffer.
    MissingLabel { frame_index: usize },
    /// A named suite entry does not exist.
    UnknownSuiteEntry { name: String },
    /// Reading or writing an artifact failed.
    Io { path: String, reason: String },
    /// A configuration file could not be parsed.
    Config { path: String, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFiniteInput { what } => write!(f, "non-finite value for {what}"),
            Self::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Self::EmptyInput { what } => write!(f, "empty input: {what}"),
            Self::InvalidParameter { what, reason } => {
                write!(f, "invalid parameter {what}: {reason}")
            }
            Self::MissingLabel { frame_index } => {
                write!(
                    f,
                    "sample from frame {frame_index} has no label and cannot enter the auxiliary buffer"
                )
            }
            Self::UnknownSuiteEntry { name } => write!(f, "unknown suite entry: {name}"),
            Self::Io { path, reason } => write!(f, "io error on {path}: {reason}"),
            Self::Config { path, reason } => write!(f, "bad config {path}: {reason}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
