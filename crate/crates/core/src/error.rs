use thiserror::Error;

/// Errors raised by the simulation engine and the protocols built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RspError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("vector is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid qubit slots: {0}")]
    InvalidSlots(String),

    #[error("index {index} out of range for {qubits} qubits")]
    IndexOutOfRange { index: usize, qubits: usize },

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("{pairs} EPR pairs cannot carry a qudit of dimension {dim}")]
    InvalidPairCount { dim: usize, pairs: usize },

    #[error("unsupported catalog dimension {0} (expected 1, 2, 4 or 8)")]
    UnsupportedCatalog(usize),

    #[error("outcome {0} has zero probability")]
    ZeroProbabilityBranch(usize),

    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),

    #[error("state is not separable under the grouping (measure {0:.3e})")]
    NotSeparable(f64),

    #[error("target is not preparable: {0}")]
    NotPreparable(String),

    #[error("transform is not registered in the U_s catalog")]
    UnknownTransform,

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, RspError>;
