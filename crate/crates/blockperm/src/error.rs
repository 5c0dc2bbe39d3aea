use thiserror::Error;

/// Errors reported by constructors, parsers and the decomposition pipelines.
///
/// Low-level algebra (`compose`, `inverse`, cycle queries) panics on width
/// mismatches instead; those are programming errors, not data errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("width {n} out of range (supported: 2..={cap})")]
    WidthOutOfRange { n: u32, cap: u32 },

    #[error("image table is not a bijection: position {position} duplicates value {value}")]
    NotBijection { position: u32, value: u32 },

    #[error("image table has wrong length: expected {expected}, got {got}")]
    BadTableLength { expected: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("widths differ: {left} vs {right}")]
    WidthMismatch { left: u32, right: u32 },

    #[error("dimension {dim} out of range for width {n}")]
    DimOutOfRange { dim: u32, n: u32 },

    #[error("dimensions must be distinct: {0:?}")]
    DimsNotDistinct(Vec<u32>),

    #[error("odd permutation: {0}")]
    OddPermutation(&'static str),

    #[error("permutation is not controlled at dimension {dim}")]
    NotControlled { dim: u32 },

    #[error("permutation is not concurrent at dimension {dim}")]
    NotConcurrent { dim: u32 },

    #[error("width {n} too small: {op} requires n >= {min}")]
    WidthTooSmall { op: &'static str, n: u32, min: u32 },

    #[error("cycle pattern is infeasible: {0}")]
    BadPattern(String),

    #[error("invalid cycle request ({a},{b}): {reason}")]
    BadPackRequest { a: u64, b: u64, reason: &'static str },

    #[error("region too small: need {need} nodes, have {have}")]
    RegionTooSmall { need: u64, have: u64 },

    #[error("canonicalization precondition violated: a2+a3 = {lhs} > b2+b3 = {rhs}")]
    MirrorRequired { lhs: u64, rhs: u64 },

    #[error("case classification {0:?} is not solvable with this dimension pair")]
    BadCase(crate::cuboid::CaseLabel),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
