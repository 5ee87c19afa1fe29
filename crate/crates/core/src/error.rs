//! Crate-wide error type.

use std::fmt;
use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A value that must be finite was NaN or infinite.
    NonFinite { context: &'static str },
    /// A dictionary column was identically zero and cannot be normalized.
    ZeroColumn { index: usize },
    /// A dictionary column's norm fell outside the accepted band around 1.
    NormDeviation { index: usize, norm: f64 },
    /// Two shapes that must agree did not.
    DimMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    /// A configuration value was out of its legal range.
    InvalidConfig { reason: String },
    /// A spike referenced a neuron index outside the receiving population.
    SpikeIndexOutOfRange { index: usize, input_dim: usize },
    /// An I/O operation failed.
    Io { path: PathBuf, source: io::Error },
    /// A file's contents did not match its expected format.
    Format { path: PathBuf, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite { context } => {
                write!(f, "non-finite value in {context}")
            }
            Error::ZeroColumn { index } => {
                write!(f, "dictionary column {index} is zero and cannot be normalized")
            }
            Error::NormDeviation { index, norm } => {
                write!(
                    f,
                    "dictionary column {index} has norm {norm}, too far from unit length"
                )
            }
            Error::DimMismatch {
                context,
                expected,
                actual,
            } => {
                write!(f, "{context}: expected length {expected}, got {actual}")
            }
            Error::InvalidConfig { reason } => write!(f, "invalid configuration: {reason}"),
            Error::SpikeIndexOutOfRange { index, input_dim } => {
                write!(
                    f,
                    "spike targets index {index} but the population has {input_dim} neurons"
                )
            }
            Error::Io { path, source } => {
                write!(f, "i/o error on {}: {source}", path.display())
            }
            Error::Format { path, reason } => {
                write!(f, "malformed file {}: {reason}", path.display())
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
