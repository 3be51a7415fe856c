use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch on axis {axis}: expected {expected}, found {found}")]
    Dimension { axis: usize, expected: usize, found: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("resource cap exceeded: {needed} entries requested, cap is {cap}")]
    Resource { needed: u128, cap: u128 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
