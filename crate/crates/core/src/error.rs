use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the domain of a function (negative `t`, a point
    /// outside the support of a coefficient field, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The left inverse could not be bracketed because `t -> phi(x, t)`
    /// stays below the target level.
    #[error("phi is not invertible at level {level}: bounded by {bound} on the search bracket")]
    NotInvertible { level: f64, bound: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    /// `(psi - f)_+` does not vanish on the boundary halo.
    #[error("infeasible obstacle problem: psi exceeds f by {excess} at halo node {node} (x = {position:?})")]
    Infeasible {
        node: usize,
        position: Vec<f64>,
        excess: f64,
    },

    /// A hypothesis of an inequality under test does not hold, so the check
    /// is not applicable.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
