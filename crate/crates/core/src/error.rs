use thiserror::Error;

/// Errors raised by graph construction, assembly, solvers and spectrum generation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid branching value j = {value} at position {index} (every j_i must be >= 2)")]
    InvalidJ { index: usize, value: u64 },

    #[error("branching sequence is empty")]
    EmptySequence,

    #[error("branching value j_{level} is not defined (sequence has {len} entries)")]
    UndefinedLevel { level: usize, len: usize },

    #[error("graph would have {vertices} vertices, exceeding the cap of {cap}")]
    TooLarge { vertices: u128, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("eigensolver did not converge: {converged} of {requested} pairs after {iterations} iterations")]
    NoConvergence {
        converged: usize,
        requested: usize,
        iterations: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("component {component} of the cut graph is not an ND/DD interval or a cross: {detail}")]
    UnclassifiablePiece { component: usize, detail: String },

    #[error("max level {max_level} does not cover lambda_max = {lambda_max} (next level starts at {next_lowest})")]
    InsufficientDepth {
        max_level: usize,
        lambda_max: f64,
        next_lowest: f64,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
