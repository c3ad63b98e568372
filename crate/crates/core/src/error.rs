use thiserror::Error;

use crate::exactnum::Field;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(Field, Field),
    #[error("{0} is not a prime modulus")]
    NotPrime(u64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("basis matrix is singular")]
    SingularBasis,
    #[error("algebra is not nilpotent")]
    NotNilpotent,
    #[error("ring elements are not compatible: {0}")]
    RingMismatch(String),
    #[error("element is not idempotent")]
    NotIdempotent,
    #[error("commutator with basis element {index} leaves the coefficient ring")]
    NotClosed { index: usize },
    #[error("basis elements are linearly dependent")]
    LinearlyDependent,
    #[error("product of basis elements {0} and {1} leaves the span")]
    ProductNotClosed(usize, usize),
    #[error("linear map violates the Leibniz rule on basis pair ({0}, {1})")]
    NotDerivation(usize, usize),
    #[error("x does not realize the derivation on basis element {index}")]
    DerivationMismatch { index: usize },
    #[error("element is not in the span of the algebra: {0}")]
    NotInSpan(String),
    #[error("commutator [a{i},x]_{j} escapes the coefficient algebra")]
    CommutatorEscapes { i: usize, j: usize },
    #[error("generated subalgebra is not nilpotent")]
    InstanceNotNilpotent,
    #[error("SyntaxError at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
