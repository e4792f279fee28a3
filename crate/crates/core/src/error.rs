use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("channel is not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("subsystem mask has {got} entries but the register has {expected} qubits")]
    MaskMismatch { expected: usize, got: usize },

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("alphabet mismatch: {0} vs {1} outcomes")]
    AlphabetMismatch(usize, usize),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("enumeration cap exceeded ({0} outcomes); use the Monte-Carlo estimator")]
    EnumerationCap(usize),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("key pool exhausted: requested {requested} bits, {available} available")]
    PoolExhausted { requested: usize, available: usize },

    #[error("zero trials requested")]
    ZeroTrials,

    #[error("round cap of {0} rounds exceeded")]
    RoundCap(usize),

    #[error("no error pattern of weight <= {max_weight} matches the syndrome")]
    DecodeFailure { max_weight: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
