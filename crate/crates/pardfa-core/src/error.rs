//! Error type shared by every module of the crate.

use thiserror::Error;

/// All the ways library operations can fail.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grail parse error at line {line}: {msg}")]
    GrailParse { line: usize, msg: String },

    #[error("grail file declares no start state")]
    MissingStart,

    #[error("cannot emit byte 0x{byte:02x} as a grail label; labels are single printable characters")]
    UnprintableLabel { byte: u8 },

    #[error("invalid automaton: {0}")]
    InvalidDfa(String),

    #[error("regex syntax error at byte {pos}: {msg}")]
    RegexSyntax { pos: usize, msg: String },

    #[error("repetition bound {got} exceeds the supported maximum {max}")]
    RepetitionTooLarge { got: u32, max: u32 },

    #[error("transition table of {states} states over {symbols} symbols overflows row offsets")]
    TableTooLarge { states: usize, symbols: usize },

    #[error("foreign byte 0x{byte:02x} at offset {offset}")]
    ForeignByte { offset: usize, byte: u8 },

    #[error("lookahead depth must be at least 1")]
    ZeroLookahead,

    #[error("lookahead table would need {needed} entries but the cap is {cap}; lower the depth")]
    LookaheadCap { needed: u128, cap: u64 },

    #[error("suffix holds {got} symbols but the table was built for depth {want}")]
    SuffixLength { got: usize, want: usize },

    #[error("symbol index {symbol} is out of range for an alphabet of {alphabet} symbols")]
    UnknownSymbol { symbol: usize, alphabet: usize },

    #[error("cache file rejected: {0}")]
    CacheMismatch(String),

    #[error("cache parse error at line {line}: {msg}")]
    CacheParse { line: usize, msg: String },

    #[error("worker count must be at least 1")]
    NoWorkers,

    #[error("capacity of worker {index} must be positive and finite, got {value}")]
    BadCapacity { index: usize, value: f64 },

    #[error("profiling sample must hold at least {min} symbols, got {got}")]
    SampleTooSmall { min: usize, got: usize },

    #[error("profiling repetitions must be odd, got {got}")]
    EvenReps { got: usize },

    #[error("profiling timer resolution too coarse; enlarge the sample")]
    TimerResolution,

    #[error("topology parse error at line {line}: {msg}")]
    Topology { line: usize, msg: String },

    #[error("invalid run configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
