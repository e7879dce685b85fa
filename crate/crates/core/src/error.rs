use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A request exceeds a configured size cap.
    #[error("resource limit exceeded: {what} = {requested} (cap {cap})")]
    Resource {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    /// An iterative solver failed to converge.
    #[error(
        "solver failed after {iterations} iterations (last x = {last_x}, residual = {residual})"
    )]
    Solver {
        iterations: usize,
        last_x: f64,
        residual: f64,
    },

    /// Malformed textual input.
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
