use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration is internally inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// Arguments passed together do not agree (lengths, rates, dimensions).
    #[error("argument error: {0}")]
    Argument(String),
    #[error("ill-conditioned channel estimate: condition number {cond:.3e} exceeds {limit:.1e}")]
    IllConditioned { cond: f64, limit: f64 },
    #[error("degenerate model fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
