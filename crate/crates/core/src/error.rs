use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid rational {0:?}")]
    ParseRational(String),

    #[error("denominator must be positive in {0:?}")]
    NonPositiveDenominator(String),

    #[error("support_len must be at least 1")]
    EmptySupport,

    #[error("expected {expected} values for support_len={support_len}, resolution={resolution}, got {got}")]
    ValueCount {
        support_len: usize,
        resolution: u32,
        expected: usize,
        got: usize,
    },

    #[error("resolution {0} is too fine")]
    ResolutionTooFine(u32),

    #[error("invalid Haar index j={j}, n={n}, i={i}")]
    InvalidHaarIndex { j: u64, n: u32, i: u64 },

    #[error("index must be ≥ 1")]
    ZeroIndex,

    #[error("exponent p must be ≥ 1, got {0}")]
    InvalidExponent(f64),

    #[error("function {index} has a negative cell")]
    NegativeCell { index: usize },

    #[error("functions {first} and {second} have overlapping supports")]
    OverlappingSupports { first: usize, second: usize },

    #[error("function {index} has L{p} norm {norm}, expected 1")]
    NotNormalized { index: usize, p: f64, norm: f64 },

    #[error("family of {got} functions exceeds the limit of {limit}")]
    FamilyTooLarge { got: usize, limit: usize },

    #[error("family and coefficient lengths differ ({family} vs {coeffs})")]
    LengthMismatch { family: usize, coeffs: usize },

    #[error("function has zero norm")]
    ZeroFunction,

    #[error("not a permutation of 1..={0}")]
    NotAPermutation(usize),

    #[error("expansion is inconsistent: {0}")]
    InconsistentExpansion(String),
}
