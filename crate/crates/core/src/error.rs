//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by all modules.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("letter {letter} out of range for rank {rank}")]
    LetterOutOfRange { letter: i32, rank: usize },
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("power query base must not be the identity")]
    IdentityBase,
    #[error("exponent vector has length {got}, expected {expected}")]
    ExponentLength { got: usize, expected: usize },
    #[error("integer overflow in exponent arithmetic")]
    Overflow,
    #[error("image count {got} does not match domain rank {expected}")]
    ImageCount { got: usize, expected: usize },
    #[error("orbit decision supports dimension <= 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("generator images a{i} and b{j} do not commute componentwise")]
    NonCommutingImages { i: usize, j: usize },
    #[error("invalid endomorphism: triviality pattern matches no type")]
    UnclassifiableEndo,
    #[error("invalid endomorphism: {0}")]
    InvalidEndo(String),
    #[error("map is not injective")]
    NotInjective,
    #[error("endomorphism is not an automorphism of the product")]
    NotAutomorphism,
    #[error("operation requires a type VI or type VII endomorphism, got type {0}")]
    WrongType(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("word length cap {0} exceeded while building an element")]
    WordLengthCap(usize),
    #[error("internal verification failed: {0}")]
    Verification(String),
}
