use thiserror::Error;

/// Runner errors, mapped onto process exit codes by the binary:
/// 1 parse, 2 invariant, 3 check breach (handled by the caller), 4 I/O.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Invariant(_) => 2,
            CliError::Io(_) => 4,
        }
    }
}

/// Exit code signalling a tolerance breach in `--check` mode.
pub const EXIT_CHECK_FAILED: i32 = 3;
