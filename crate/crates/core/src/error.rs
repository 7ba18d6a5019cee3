use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Coarse failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Transport,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("vocabulary needs at least 2 words, got {0}")]
    VocabularyTooSmall(usize),
    #[error("duplicate word {word:?} on lines {first_line} and {second_line}")]
    DuplicateWord { word: String, first_line: usize, second_line: usize },
    #[error("invalid word {word:?} on line {line}: {reason}")]
    InvalidWord { word: String, line: usize, reason: &'static str },
    #[error("cue {0:?} is not in the vocabulary")]
    UnknownCue(String),
    #[error("word id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: usize, size: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("layer 0 is not a contextual layer and cannot be used")]
    LayerZero,

    #[error("count matrix is empty (total count is zero)")]
    EmptyMatrix,
    #[error("rank {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },
    #[error("k = {k} must be smaller than the number of unmasked words ({available})")]
    NeighborhoodTooLarge { k: usize, available: usize },
    #[error("zero variance in {0} similarity vector")]
    ZeroVariance(&'static str),
    #[error("test target is constant; R^2 is undefined")]
    DegenerateTest,
    #[error("linear system is not positive definite")]
    Singular,
    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("leakage: {0}")]
    Leakage(String),

    #[error("participant transport failure: {0}")]
    Transport(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::Transport(_) => ErrorClass::Transport,
            Error::EmptyMatrix | Error::ZeroVariance(_) | Error::DegenerateTest | Error::Singular => {
                ErrorClass::Numerical
            }
            _ => ErrorClass::Data,
        }
    }
}
