use thiserror::Error;

use crate::pattern::Occurrence;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed token {0:?}")]
    MalformedToken(String),

    #[error("value {0} appears more than once")]
    RepeatedValue(usize),

    #[error("value {value} is outside 1..={n}")]
    ValueOutOfRange { value: usize, n: usize },

    #[error("operation requires a nonempty permutation")]
    EmptyInput,

    #[error("malformed pattern spec {0:?}")]
    BadPatternSpec(String),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    /// The input violates the map's domain: it contains `pattern`.
    #[error("input {input} contains {pattern} at positions {witness}")]
    InputContainsPattern {
        pattern: String,
        input: String,
        witness: Occurrence,
    },

    /// Not enough eligible values to refill a block. Unreachable for valid
    /// inputs; reaching it means the refill logic is wrong.
    #[error("refill exhausted the value pool at block {block}")]
    InternalExhaustion { block: usize },

    #[error("selection does not match the one computed for {0}")]
    SelectionMismatch(String),

    /// An H/Q occurrence lies entirely above the row of the selected F.
    #[error("{input} has an H/Q occurrence above row {row}")]
    HypothesisViolation { input: String, row: usize },

    #[error("iteration did not terminate within {limit} steps on {input}")]
    NonTermination { input: String, limit: usize },

    /// A structural property that the construction guarantees did not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            Error::MalformedToken(_)
                | Error::RepeatedValue(_)
                | Error::ValueOutOfRange { .. }
                | Error::BadPatternSpec(_)
                | Error::BadParameter(_)
        )
    }

    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InputContainsPattern { .. } | Error::HypothesisViolation { .. } | Error::EmptyInput
        )
    }
}
