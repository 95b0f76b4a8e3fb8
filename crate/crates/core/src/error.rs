use thiserror::Error;

use crate::progression::ApWitness;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("progression length must be at least 3, got {0}")]
    InvalidP(usize),

    #[error("term count must be at least 1")]
    InvalidCount,

    #[error("element {value} exceeds the supported maximum {max}")]
    Overflow { value: u128, max: u64 },

    #[error("elements must be positive integers")]
    NonPositive,

    #[error("elements must be strictly increasing: {prev} followed by {next}")]
    NotIncreasing { prev: u64, next: u64 },

    #[error("{x} is not larger than the current maximum {max}")]
    NotAnExtension { x: u64, max: u64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("set has {len} elements, above the exact-arithmetic cap {cap}")]
    ExactnessBudgetExceeded { len: usize, cap: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("amplifier sum {mu_amplifier:.6} is below the required {required}")]
    AmplifierTooSmall { mu_amplifier: f64, required: u64 },

    #[error("{which} set contains a progression: {witness}")]
    NotApFree { which: &'static str, witness: ApWitness },

    #[error("{x} is below the partition floor 2M = {floor}")]
    BelowRange { x: u64, floor: u64 },

    /// A construction that guarantees a progression-free result produced a
    /// progression anyway.
    #[error("{claim}: found progression {witness}")]
    ClaimViolated { claim: String, witness: ApWitness },

    #[error("set is described only up to {horizon}, {requested} requested")]
    HorizonExceeded { horizon: u64, requested: u64 },

    #[error("sequence does not agree with the limit on the first {k} positions at its last member")]
    NotConvergedAtHorizon { k: u64 },

    #[error("no cut point yields a tail below {half_epsilon}")]
    TailNotSmall { half_epsilon: f64 },

    #[error("exhaustive search is limited to N <= {max}, got {n}")]
    TooLargeForExhaustive { n: u64, max: u64 },

    #[error("branch and bound is limited to N <= {max}, got {n}")]
    TooLargeForBranchAndBound { n: u64, max: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
