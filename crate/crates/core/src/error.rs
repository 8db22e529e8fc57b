use thiserror::Error;

use crate::choice::Choice;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BetheError {
    #[error("choices {0} and {1} share a symbol")]
    Overlap(Choice, Choice),

    #[error("symbol {symbol} out of range for {m} particles")]
    SymbolOutOfRange { symbol: usize, m: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid Bethe data: {0}")]
    InvalidData(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("{what} exceeds oracle bound ({size} > {limit})")]
    OracleBound {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("network mismatch: {0}")]
    NetworkMismatch(String),

    #[error("not homogeneous: {0}")]
    NotHomogeneous(String),

    #[error("matrix is not an isometry (deviation {0:.3e})")]
    NotIsometric(f64),

    #[error("unsupported lattice size: {0}")]
    LatticeSize(String),

    #[error("serialization: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, BetheError>;
