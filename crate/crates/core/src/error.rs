use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive band was doubled up to its cap and the minimizer still touched the edge.
    #[error("band exhausted after {doublings} doublings (half-width {half_width}) at site {site}")]
    BandExhausted {
        doublings: u32,
        half_width: f64,
        site: usize,
    },

    /// Two routes to the same quantity disagree.
    #[error("inconsistent results: {0}")]
    Inconsistent(String),

    /// A configuration failed validation; one message per offending field.
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
