use thiserror::Error;

use crate::label::BitLabel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("invalid digit {digit:?} at position {pos}")]
    InvalidDigit { digit: char, pos: usize },
    #[error("label {label} is {len} bits long, limit is {max}")]
    TooLong { label: BitLabel, len: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrieError {
    #[error("msd is undefined for equal operands ({0})")]
    EqualOperands(usize),
    #[error("{shorter} is not a proper prefix of {longer}")]
    NotProperPrefix { shorter: BitLabel, longer: BitLabel },
    #[error("key set is empty")]
    EmptyKeySet,
    #[error("duplicate key {0}")]
    DuplicateKey(BitLabel),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("no key is stored in the system")]
    NoKeys,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Trie(#[from] TrieError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error("corruption script would break key preservation: {0}")]
    KeyPreservation(String),
    #[error("line {line}: {message}")]
    KeysFile { line: usize, message: String },
    #[error("cannot draw {wanted} distinct keys of length 1..={len}")]
    KeySpaceTooSmall { wanted: usize, len: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
