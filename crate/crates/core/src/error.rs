use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands that must agree in length or shape do not.
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    EmptyInput(&'static str),
    InvalidArgument(String),
    UnknownType(String),
    DuplicateId(String),
    /// Cosine similarity against a zero vector.
    UndefinedCosine,
    NumericOverflow,
    /// Training produced a non-finite loss.
    Diverged {
        epoch: usize,
        batch: usize,
    },
    VocabularyMismatch {
        expected: u64,
        found: u64,
    },
    Infeasible(String),
    Frozen,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::EmptyInput(what) => write!(f, "empty {what}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::UnknownType(name) => write!(f, "unknown type name {name:?}"),
            Error::DuplicateId(id) => write!(f, "duplicate id {id:?}"),
            Error::UndefinedCosine => f.write_str("undefined cosine"),
            Error::NumericOverflow => f.write_str("numeric overflow"),
            Error::Diverged { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch {batch}")
            }
            Error::VocabularyMismatch { expected, found } => {
                write!(f, "type vocabulary mismatch: expected hash {expected:016x}, found {found:016x}")
            }
            Error::Infeasible(msg) => write!(f, "infeasible configuration: {msg}"),
            Error::Frozen => f.write_str("index is frozen"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
