use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("ratio at time {time} is not an integer")]
    NonIntegerRatio { time: i64 },

    #[error("ratio at time {time} is {ratio}, must be at least 2")]
    RatioTooSmall { time: i64, ratio: String },

    #[error("length at time {time} needs about {bits} bits, over the limit of {limit}")]
    TooLarge { time: i64, bits: u64, limit: u64 },

    #[error("cannot parse schedule spec `{input}`: {reason}")]
    SpecParse { input: String, reason: String },

    #[error("cannot parse word `{input}`: {reason}")]
    WordParse { input: String, reason: String },

    #[error("{what} = {value} is out of range ({range})")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: String,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("block alphabet needs {required_bits} bits per letter, encoding width is 64")]
    EncodingWidth { required_bits: u64 },

    #[error("word of {letters} letters exceeds the memory cap of {cap}")]
    MemoryCap { letters: String, cap: usize },

    #[error("computation of size {size} exceeds the cap of {cap}")]
    ComputeCap { size: String, cap: usize },

    #[error("degree mismatch at time {time}: expected {expected}, got {got}")]
    DegreeMismatch {
        time: i64,
        expected: usize,
        got: usize,
    },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("replica {replica} failed: {source}")]
    Replica {
        replica: u64,
        #[source]
        source: Box<Error>,
    },
}
