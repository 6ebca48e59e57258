use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input: unknown ids, scores out of range,
    /// invalid caps, parse failures.
    #[error("invalid input: {0}")]
    Input(String),

    /// The covering search ran out of node expansions before proving optimality.
    #[error("search budget exhausted after {0} node expansions")]
    BudgetExhausted(u64),

    /// An exhaustive enumeration was refused because the instance is too large.
    #[error("{what} has size {size}, above the enumeration limit {limit}")]
    LimitExceeded {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
