use thiserror::Error;

/// Errors produced by the f-mean calculus.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown mean function `{0}`")]
    UnknownMeanFunction(String),

    #[error("invalid parameters for `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("value {value} lies outside the domain {domain}")]
    OutOfDomain { value: f64, domain: String },

    #[error("value {value} sits on the open boundary of the codomain {codomain}")]
    CodomainBoundary { value: f64, codomain: String },

    #[error("value {value} lies outside the codomain {codomain}")]
    OutsideCodomain { value: f64, codomain: String },

    #[error("bisection failed to bracket {target} within the codomain")]
    NoBracket { target: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("negative weight {0}")]
    NegativeWeight(f64),

    #[error("total weight mass is zero")]
    ZeroWeightMass,

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("partition is not a refinement of its predecessor (block {block})")]
    NotRefinement { block: usize },

    #[error("{what} is not measurable with respect to the given partition")]
    NotMeasurable { what: String },

    #[error("mean function `{name}` is {found}; this operation requires {required}")]
    Convexity {
        name: String,
        found: &'static str,
        required: &'static str,
    },

    #[error("exact enumeration of {size} tuples exceeds the limit {limit}")]
    EnumerationTooLarge { size: u128, limit: u128 },

    #[error("f-variance is zero; standardization is undefined")]
    DegenerateVariance,

    #[error("invalid Markov chain: {0}")]
    InvalidChain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerics (inversion off the codomain, lost
    /// brackets) as opposed to rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CodomainBoundary { .. }
                | Error::OutsideCodomain { .. }
                | Error::NoBracket { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
