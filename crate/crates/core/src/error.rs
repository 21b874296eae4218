use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus {q} is not prime; this operation needs a field")]
    CompositeModulus { q: u32 },

    #[error("modulus {q} is outside the supported range 2..=255")]
    InvalidModulus { q: u32 },

    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u32, right: u32 },

    #[error("enumeration of {needed} states exceeds the budget of {cap}")]
    BudgetExceeded { needed: f64, cap: u64 },

    #[error("assignment covers {got} edges, expected {expected}")]
    IncompleteAssignment { expected: usize, got: usize },

    #[error("operation needs an NFG without half-edges, found {count}")]
    HalfEdgesPresent { count: usize },

    #[error("intermediate table of arity {arity} exceeds the cap of {cap}")]
    IntermediateTableTooLarge { arity: usize, cap: usize },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("hole index {index} is not a face (there are {faces} faces)")]
    InvalidHoleIndex { index: usize, faces: usize },

    #[error("boundary of boundary is nonzero between dimensions {upper} and {lower}")]
    BoundaryConditionViolated { upper: usize, lower: usize },

    #[error("complex was not built as a torus")]
    NotATorus,

    #[error("entry {value} at ({row}, {col}) is not 0 or +-1 mod {q}")]
    UnsupportedEntry {
        row: usize,
        col: usize,
        value: u8,
        q: u32,
    },

    #[error("inverse temperature must be positive, got {0}")]
    NonpositiveBeta(f64),

    #[error("inverse temperature {0} is outside the supported range [0, 12]")]
    BetaOutOfRange(f64),

    #[error("unknown cycle `{0}` for this lattice")]
    UnknownCycle(String),

    #[error("invalid NFG: {0}")]
    InvalidNfg(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid elimination order: {0}")]
    InvalidOrder(String),
}

pub type Result<T> = std::result::Result<T, Error>;
