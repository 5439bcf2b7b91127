//! Shared error type for everything that can go wrong at a module boundary.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An operation received an empty sequence or list it cannot handle.
    EmptyInput { what: &'static str },
    /// Vector/matrix/sequence length disagreement.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A label fell outside the declared alphabet.
    LabelOutOfRange { label: usize, alphabet_size: usize },
    /// The model assigns (numerically) zero probability to the target;
    /// `(t, u)` names the first unreachable lattice cell (1-based t).
    ZeroProbability { t: usize, u: usize },
    /// Beam search needs a width of at least one.
    InvalidBeamWidth { width: usize },
    /// A hypothesis emitted more labels within one transcription step than
    /// the safety cap allows; the model is degenerate.
    EmissionCapExceeded { step: usize, cap: usize },
    /// A brute-force oracle was asked to enumerate more than its guard.
    EnumerationTooLarge { size: u64, limit: u64 },
    /// A configuration value is out of range.
    InvalidConfig { what: String },
    /// Training aborted on the sequence at this dataset position.
    TrainingFailed { sequence_index: usize, cause: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyInput { what } => write!(f, "empty input: {what}"),
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, got {got}"),
            Error::LabelOutOfRange {
                label,
                alphabet_size,
            } => write!(f, "label {label} out of range for alphabet of size {alphabet_size}"),
            Error::ZeroProbability { t, u } => write!(
                f,
                "target has zero probability under the model; first blocked lattice cell (t={t}, u={u})"
            ),
            Error::InvalidBeamWidth { width } => {
                write!(f, "beam width must be at least 1, got {width}")
            }
            Error::EmissionCapExceeded { step, cap } => write!(
                f,
                "more than {cap} labels emitted during transcription step {step}; model is degenerate"
            ),
            Error::EnumerationTooLarge { size, limit } => {
                write!(f, "enumeration of size {size} exceeds oracle guard {limit}")
            }
            Error::InvalidConfig { what } => write!(f, "invalid configuration: {what}"),
            Error::TrainingFailed {
                sequence_index,
                cause,
            } => write!(f, "training failed on sequence {sequence_index}: {cause}"),
        }
    }
}

impl core::error::Error for Error {}
