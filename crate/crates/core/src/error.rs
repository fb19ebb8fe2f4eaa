use thiserror::Error;

/// Errors raised by the workbench.
///
/// Semi-decisions never use this type to report "unknown"; they return
/// [`crate::Tri::Inconclusive`] instead.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("resolution too fine: enumeration would exceed the cap of {cap} elements")]
    ResolutionTooFine { cap: usize },
    #[error("window mismatch: {left} vs {right}")]
    WindowMismatch { left: String, right: String },
    #[error("containment failure: element {witness} is not in the enclosing subgroup")]
    NotContained { witness: String },
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("unsupported prime {0}")]
    UnsupportedPrime(u64),
    #[error("not p-integral: {0}")]
    NotIntegral(String),
    #[error("element is not in the reference compact open subgroup: {0}")]
    OutsideReference(String),
    #[error("unsupported element class: {0}")]
    UnsupportedClass(String),
    #[error("basis mismatch: the subgroup basis does not diagonalize the element")]
    BasisMismatch,
    #[error("singular matrix")]
    Singular,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("factorization failure at pivot {pivot}: {witness}")]
    Factorization { pivot: usize, witness: String },
    #[error("not tidy above at level {level}: witness {witness}")]
    NotTidyAbove { level: u32, witness: String },
    #[error("cap exceeded: no k <= {max_k} gives a subgroup tidy above")]
    CapExceeded { max_k: u32 },
    #[error("no stabilization within horizon {0}")]
    NoStabilization(u32),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("characterizations disagree: {0}")]
    Disagreement(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
