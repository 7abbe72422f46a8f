use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("characteristic {0} is not prime")]
    NonPrimeCharacteristic(u64),

    #[error("modulus polynomial is not monic")]
    NonMonic,

    #[error("modulus polynomial is reducible")]
    ReducibleModulus,

    #[error("field size {0} exceeds the supported cap of 256")]
    FieldTooLarge(u64),

    #[error("division by zero")]
    DivideByZero,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not invertible")]
    NotInvertible,

    #[error("budget exceeded: needed {needed}, budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },

    #[error("sandwich element has wrong shape or lies in the wrong hom-set")]
    BadSandwichElement,

    #[error("element is not regular in the sandwich semigroup")]
    NotRegular,

    #[error("pair is not in the image of the corner embedding")]
    NotInImage,

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("greedy search failed: wanted a generating set of size {target}, best found {best}")]
    GreedySearchFailed { target: usize, best: usize },

    #[error("degenerate case: {0}")]
    DegenerateCase(String),

    #[error("assertion failure: {0}")]
    AssertionFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
