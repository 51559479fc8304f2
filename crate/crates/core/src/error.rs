use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A residue was inverted against a modulus it is not coprime to.
    #[error("{value} is not invertible mod {modulus} (gcd = {gcd})")]
    NonInvertible { value: u64, modulus: u64, gcd: u64 },

    /// A precondition on the arguments was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A square root was requested for a quadratic non-residue.
    #[error("{value} is not a square unit mod {prime}")]
    NotASquare { value: u64, prime: u64 },

    /// A character index shares a factor with p, so the character is imprimitive.
    #[error("character index {index} gives an imprimitive character mod {modulus}")]
    NotPrimitive { index: u64, modulus: u64 },

    /// An internally verified identity failed; this indicates a bug, not bad data.
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    /// A declared differentiability contract failed a spot check.
    #[error("phase-data contract violated: {0}")]
    ContractViolation(String),

    /// Fixed-width p-adic arithmetic ran out of precision.
    #[error("precision loss: {0}")]
    PrecisionLoss(String),

    /// Parameters fall outside the regime where a statement is claimed.
    #[error("regime violation: {0}")]
    RegimeViolation(String),

    /// A sweep would exceed the configured summand-evaluation budget.
    #[error("budget exceeded: estimated {estimated} summand evaluations > budget {budget}")]
    BudgetExceeded { estimated: u64, budget: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
