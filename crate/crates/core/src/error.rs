use thiserror::Error;

/// Errors raised by the estimation, simulation and evaluation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alphabet size {given} is smaller than the {observed} distinct observed symbols")]
    InconsistentAlphabet { given: usize, observed: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("index {index} is outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("model is not valid: {0}")]
    InvalidModel(String),

    #[error("transition matrix failed the {check} check")]
    NotErgodic { check: &'static str },

    #[error("chain mixes too slowly: no lag up to {cap} reached eps = {eps:e}")]
    SlowMixing { cap: usize, eps: f64 },

    #[error("symbol {0:?} is not covered by the ground-truth law")]
    UnknownSymbol(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T: ToString>(name: &'static str, value: T, expected: &'static str) -> Error {
    Error::Domain {
        name,
        value: value.to_string(),
        expected,
    }
}
