use thiserror::Error;

/// Errors raised by the library.
///
/// `Infeasible` is kept apart from input errors because a matching problem in
/// which every hypothesis has infinite weight is a property of the data, not
/// of the call.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("no cardinality-{k} matching has finite weight")]
    Infeasible { k: usize },
    #[error("size guard exceeded: {0}")]
    Guard(String),
    #[error("integer overflow computing {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
