use thiserror::Error;

use crate::instance::{Matching, Violation};
use crate::tadam::Clique;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown school #{0}")]
    UnknownSchool(usize),
    #[error("unknown student #{0}")]
    UnknownStudent(usize),
    #[error("instance must be strict: {0}")]
    NonStrict(String),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("invalid instance: {}", join(.0))]
    InvalidInstance(Vec<Violation>),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("invalid cabal loop: {0}")]
    InvalidCabalLoop(String),
    #[error("displaced set contains the pivot school {0}")]
    DisplacedOverlapsPivot(String),
    #[error("cycle limit of {limit} exceeded")]
    CycleLimitExceeded { limit: usize, partial: Vec<Clique> },
    #[error("search limit of {limit} matchings exceeded")]
    SearchLimitExceeded { limit: usize, partial: Vec<Matching> },
    #[error("stale clique: {0}")]
    StaleClique(String),
    #[error("target does not dominate or equal the SOSM outcome")]
    NotDominating,
    #[error("target is not a seat permutation of the SOSM outcome")]
    NotSeatPermutation,
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
