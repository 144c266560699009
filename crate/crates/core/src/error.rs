use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("gcd condition violated: {0}")]
    NotCoprime(String),
    #[error("character rejected: {0}")]
    CharacterRejected(String),
    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),
    #[error("pole of the gamma function at {0}")]
    GammaPole(String),
    #[error("support violated: {0}")]
    Support(String),
    #[error("modulus {q}, character {index}: {source}")]
    Context {
        q: u64,
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
