//! Error taxonomy shared by the whole crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The transition graph has more than one recurrent communicating class,
    /// so the stationary distribution is not unique.
    #[error("process has multiple recurrent classes; stationary distribution is not unique")]
    MultipleRecurrentClasses,

    /// A word refers to a symbol index outside its alphabet.
    #[error("symbol index {index} is out of range for an alphabet of {alphabet_len} symbols")]
    AlphabetMismatch { index: u16, alphabet_len: usize },

    /// The requested history lies outside the support of the process.
    #[error("history {history:?} has probability zero under this process")]
    ZeroProbabilityHistory { history: String },

    /// Enumerating |A|^L words would exceed the block guard.
    #[error("block of {symbols}^{length} words exceeds the enumeration guard of {guard}")]
    BlockTooLarge {
        symbols: usize,
        length: usize,
        guard: u64,
    },

    /// The history window is too short for the causal partition to have
    /// deterministic transitions; retry with a larger K.
    #[error("partition is not deterministic at horizon K={k}, L={l}: {detail}; increase K")]
    NonDeterministicAtHorizon { k: usize, l: usize, detail: String },

    /// Exhaustive partition enumeration refused: Bell growth.
    #[error("{count} histories exceed the exhaustive-enumeration limit of {limit}")]
    TooManyHistories { count: usize, limit: usize },

    /// Input sequence shorter than one (history, future) window.
    #[error("sequence of length {length} is shorter than one window of K+L={window} symbols")]
    SequenceTooShort { length: usize, window: usize },

    /// The determinization loop did not reach a fixed point.
    #[error("determinization did not converge within {iterations} iterations")]
    DeterminizationDiverged { iterations: usize },

    /// A distribution failed validation (negative weight, bad normalization).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A process specification failed validation or parsing.
    #[error("invalid process specification: {0}")]
    InvalidSpec(String),

    /// A machine failed validation or parsing.
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
}
