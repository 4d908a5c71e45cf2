use thiserror::Error;

use crate::nulling::SnmSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array configuration: {0}")]
    InvalidArray(String),

    #[error("element index ({m}, {n}) outside a {rows}x{cols} array")]
    IndexOutOfRange {
        m: usize,
        n: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("non-finite phase {0}")]
    NonFinitePhase(f64),

    #[error("cannot quantize a zero complex value")]
    ZeroQuantization,

    #[error("target coincides with element ({m}, {n})")]
    CoincidentElement { m: usize, n: usize },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid null specification: {0}")]
    InvalidNullSpec(String),

    #[error("weighted reflection sum vanishes at element ({m}, {n})")]
    DegenerateWeights { m: usize, n: usize },

    #[error("degenerate field pattern: {0}")]
    DegeneratePattern(String),

    #[error("null center at {r} m lies outside the near field (boundary {boundary} m)")]
    NotNearField { r: f64, boundary: f64 },

    #[error("no feasible squeeze-nulling solution within budget (best objective {})", .0.depth)]
    Infeasible(Box<SnmSolution>),

    #[error("EVM undefined: zero reference field")]
    ZeroReference,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no perturbed sequence accepted after {attempts} attempts; deepen the null or lower EVM0")]
    LibraryExhausted { attempts: usize },

    #[error("no library entry admits a valid time-slot ratio")]
    EmptyRatioSet,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("library parse error on line {line}: {msg}")]
    LibraryParse { line: usize, msg: String },
}
