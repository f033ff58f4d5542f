use thiserror::Error;

/// Errors surfaced by the library.
///
/// Configuration and file-format problems carry enough context (field names,
/// line numbers) to be actionable without a debugger.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("maze definition line {line}: {msg}")]
    MazeParse { line: usize, msg: String },

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state outside free space: {0}")]
    OutsideFreeSpace(String),

    #[error("empty buffer: {0}")]
    EmptyBuffer(&'static str),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
