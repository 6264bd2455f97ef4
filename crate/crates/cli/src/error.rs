use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("corrupt field file at byte {offset}: {reason}")]
    CorruptFile { offset: u64, reason: String },

    #[error("config file line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("output directory {0} is locked by another run")]
    Locked(String),

    #[error(transparent)]
    Core(#[from] gino_core::Error),

    #[error("plot rendering failed: {0}")]
    Plot(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
