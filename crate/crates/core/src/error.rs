use thiserror::Error;

/// Errors produced by the core toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid automaton: {0}")]
    InvalidDfa(&'static str),
    #[error("missing transition from state {state} on symbol {symbol}")]
    MissingTransition { state: usize, symbol: u8 },
    #[error("operation requires a complete automaton")]
    Incomplete,
    #[error("operation requires a minimized automaton")]
    NotMinimal,
    #[error("tomita grammar index {0} is out of range 1..=7")]
    GrammarOutOfRange(u8),
    #[error("no closed form for grammar {0}")]
    NoClosedForm(u8),
    #[error("invalid symbol {0}; expected 0 or 1")]
    InvalidSymbol(u8),
    #[error("empty strings cannot be encoded")]
    EmptyString,
    #[error("length {len} exceeds the limit of {limit}")]
    LengthTooLarge { len: usize, limit: usize },
    #[error("class counts do not sum to 2^N")]
    InvalidCounts,
    #[error("degenerate distribution: only one class is present at length {0}")]
    Degenerate(usize),
    #[error("no positive strings of grammar {grammar} in lengths {min}..={max}")]
    NoPositives { grammar: u8, min: usize, max: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("activation {0} is not available for this architecture")]
    UnsupportedActivation(&'static str),
    #[error("input is empty")]
    EmptyInput,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
