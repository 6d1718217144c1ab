use thiserror::Error;

/// Errors raised by the library. Report-valued checks never use this type;
/// it is reserved for malformed input and violated preconditions.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("matrix does not define an automorphism: {0}")]
    NotAutomorphism(String),
    #[error("element is not a member of the subgroup")]
    NotInSubgroup,
    #[error("inputs lie on the same orbit")]
    SameOrbit,
    #[error("no witness found")]
    NotFound,
    #[error("level {level} is beyond the tower depth {depth}")]
    BeyondDepth { level: usize, depth: usize },
    #[error("level {0} carries the wrong schedule tag for this operation")]
    WrongTag(usize),
    #[error("points are not tail-equivalent within the truncation")]
    NotEquivalent,
    #[error("alpha generator exhausted at level {0}")]
    GeneratorExhausted(usize),
    #[error("shift {shift} is not smaller than the tower height at depth {depth}")]
    ShiftTooLarge { shift: i128, depth: usize },
    #[error("insufficient depth: need {required} levels, tower has {available}")]
    InsufficientDepth { required: usize, available: usize },
    #[error("hypothesis failure: {0}")]
    HypothesisFail(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
