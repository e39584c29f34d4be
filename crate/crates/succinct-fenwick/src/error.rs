use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A build or command parameter violates a structural constraint.
    /// The message names the violated constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An input value does not fit the declared element width.
    #[error("value {value} does not fit in {width} bits")]
    ValueOverflow { value: u64, width: u32 },

    /// A binary input file is malformed; `offset` is the byte at which
    /// parsing failed.
    #[error("malformed file at byte offset {offset}: {reason}")]
    Parse { offset: u64, reason: String },

    /// A trace file line could not be parsed or replayed.
    #[error("trace line {line}: {reason}")]
    TraceLine { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
