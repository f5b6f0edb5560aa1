use thiserror::Error;

/// Crate-wide error type.
///
/// Every fallible operation in the toolkit reports one of these variants;
/// the names track the failure modes of the protocol layer (field setup,
/// linear algebra, query construction, wire handling).
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("inversion of zero in F_{q}")]
    InversionOfZero { q: u64 },

    #[error("field mismatch: F_{left} vs F_{right}")]
    FieldMismatch { left: u64, right: u64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("duplicate evaluation points")]
    DuplicateEvaluationPoints,

    #[error("singular system")]
    SingularSystem,

    #[error("field too small: need q >= {needed}, got q = {q}")]
    FieldTooSmall { q: u64, needed: u64 },

    #[error("D > M: the GRS protocol is the only option for this instance")]
    UseGrsInstead,

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("enumeration bound exceeded: K = {k} > {bound}")]
    EnumerationBoundExceeded { k: usize, bound: usize },

    #[error("query is not reachable under the enumerated distribution")]
    UnreachableQuery,

    #[error("invalid demand counts: {0}")]
    InvalidCounts(String),

    #[error("demand set is not compliant with the query")]
    NotCompliant,

    #[error("divisibility preconditions not satisfied")]
    DivisibilityNotSatisfied,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("wire error: {0}")]
    Wire(String),

    #[error("fetch error: {0}")]
    Fetch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
