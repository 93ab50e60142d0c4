use thiserror::Error;

/// Errors raised anywhere in the simulation and verification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid density specification: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no root bracket for regime {regime} at n = {n}: {reason}")]
    NoBracket {
        regime: String,
        n: f64,
        reason: String,
    },

    #[error("complex exceeds clique budget: {count} simplices enumerated, budget is {budget}")]
    ComplexityBudget { count: usize, budget: usize },

    #[error("filtration has max_dim = {max_dim}, degree-{k} persistence needs at least {}", .k + 1)]
    MaxDimTooSmall { max_dim: usize, k: usize },

    #[error("covariance matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed configuration at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
