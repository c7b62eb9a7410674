use thiserror::Error;

/// Errors surfaced by the numerical layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Operator parameters outside their admissible range.
    #[error("invalid operator spec: {0}")]
    InvalidSpec(String),

    /// Two fields (or a field and a multiplier) live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A precondition on an operation argument failed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A requested measurement cannot be trusted on this grid.
    #[error("unresolved: {0}")]
    Unresolved(String),

    /// The time stepper produced a non-finite state.
    #[error("solution blew up at step {step} (t = {t}): {what}")]
    Blowup { step: usize, t: f64, what: String },

    /// Run configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
