use thiserror::Error;

use crate::vector::SparseVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which side of a game made an illegal move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Player {
    I,
    II,
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Player::I => f.write_str("I"),
            Player::II => f.write_str("II"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("field mismatch: {left} vs {right}")]
    FieldMismatch { left: String, right: String },

    #[error("division by zero")]
    DivisionByZero,

    #[error("malformed scalar {text:?} for field {field}")]
    MalformedScalar { text: String, field: String },

    #[error("operation requires a nonzero vector")]
    ZeroVector,

    #[error("not a block sequence: entry {index} is not above its predecessor")]
    NotBlockSequence { index: usize },

    #[error("malformed vector: {0}")]
    MalformedVector(String),

    #[error("malformed preset: {0}")]
    MalformedPreset(String),

    #[error("raw generator exhausted after {rows} rows (finite-dimensional input)")]
    StreamExhausted { rows: usize },

    #[error("fuel limit of {limit} stream steps exhausted")]
    FuelExhausted { limit: u64 },

    #[error("coordinate index overflow in stream row {row}")]
    IndexOverflow { row: usize },

    #[error("precondition violated for member {k}: {what} (witness {witness})")]
    Precondition {
        k: usize,
        what: String,
        witness: SparseVector,
    },

    #[error("postcondition violated for member {k}: {what}")]
    Postcondition { k: usize, what: String },

    #[error("missing almost-disjointness certificate for pair ({i}, {j})")]
    MissingCertificate { i: usize, j: usize },

    #[error("certificate for pair ({i}, {j}) fails at depth {depth}: {what}")]
    BadCertificate {
        i: usize,
        j: usize,
        depth: usize,
        what: String,
    },

    #[error("member index {index} out of range (family has {len} members)")]
    InvalidIndex { index: usize, len: usize },

    #[error("spot check failed on row {row}: {what}")]
    SpotCheck { row: usize, what: String },

    #[error("dominating function fails at member {alpha}, argument {n}: h = {h}, needed {needed}")]
    NotDominating {
        alpha: usize,
        n: usize,
        h: usize,
        needed: usize,
    },

    #[error("function table too short: needed argument {needed}, table has {len} entries")]
    TableTooShort { needed: usize, len: usize },

    #[error("chain descent violated: row {row} of link {link} is not in link {prev}")]
    ChainDescent { link: usize, prev: usize, row: usize },

    #[error("malformed block: {0}")]
    MalformedBlock(String),

    #[error("block {index} of the target sequence is not a union of source supports")]
    Decomposition { index: usize },

    #[error("illegal move by player {player} in round {round}: {rule}")]
    IllegalMove {
        player: Player,
        round: usize,
        rule: String,
    },

    #[error("strategy cannot move in round {round}: {why}")]
    Strategy { round: usize, why: String },

    #[error("invalid condition: {0}")]
    InvalidCondition(String),

    #[error("pair ({label}, {beta}) already present in condition")]
    DuplicatePair { label: String, beta: usize },

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn mismatch(left: impl std::fmt::Display, right: impl std::fmt::Display) -> Self {
        Error::FieldMismatch {
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    /// Errors caused by input that could not be decoded, as opposed to a
    /// well-formed claim that turned out false.
    pub fn is_malformed_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidField(_)
                | Error::MalformedScalar { .. }
                | Error::MalformedVector(_)
                | Error::MalformedPreset(_)
                | Error::MalformedBlock(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::FieldMismatch { .. }
        )
    }
}
