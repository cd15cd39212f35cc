use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),

    #[error("symbol {symbol} outside alphabet 1..={alphabet_size}")]
    InvalidSymbol { symbol: u8, alphabet_size: usize },

    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),

    #[error("periodic tail must be nonempty")]
    EmptyTail,

    #[error("word must be nonempty")]
    EmptyWord,

    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },

    #[error("row {row} of the transition matrix sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },

    #[error("transition matrix entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("transition matrix is reducible")]
    Reducible,

    #[error("invalid stationary vector: {0}")]
    InvalidStationary(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point coordinate {0} lies outside [0, 1]")]
    OutOfDomain(String),

    #[error("invalid piecewise-linear map: {0}")]
    InvalidMap(String),

    #[error("map is not nondecreasing between breakpoints {0} and {1}")]
    NotMonotone(usize, usize),

    #[error("word {0:?} is not admissible for the transition matrix")]
    InadmissibleWord(Vec<u8>),

    #[error("last symbols differ: {0} vs {1}")]
    LastSymbolMismatch(u8, u8),

    #[error("projections overlap on coordinate {coordinate} (overlap width {overlap})")]
    ProjectionsOverlap { coordinate: usize, overlap: f64 },

    #[error("cylinder has no atoms under one of the two constructions")]
    EmptyCylinder,

    #[error("{fraction:.4} of the draws failed to converge (limit {limit})")]
    DiscardFractionTooHigh { fraction: f64, limit: f64 },

    #[error("transport problem with {atoms} atoms exceeds the exact solver budget of {budget}")]
    BudgetExceeded { atoms: usize, budget: usize },

    #[error("transport simplex stopped after {0} pivots without reaching optimality")]
    SolverStalled(usize),

    #[error("K-pair invariant violated: {0}")]
    KPair(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coding did not converge at depth {depth} (diameter {diameter:e})")]
    NotConverged { depth: usize, diameter: f64 },

    #[error("cannot parse number {0:?}")]
    ParseNumber(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
