use thiserror::Error;

/// Errors produced by the series, species and sampling layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exponential of a series with nonzero constant term is not representable exactly")]
    NonzeroConstantTerm,
    #[error("tail of the series is not controlled at x = {x}: empirical term ratio {ratio} is not below 1")]
    TailNotControlled { x: f64, ratio: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("inner species has a size-0 object (G[empty] must be empty)")]
    InnerHasConstantTerm,
    #[error("recursive definition `{0}` is not well-founded")]
    IllFoundedRecursion(String),
    #[error("enumeration size {n} exceeds guard {guard}")]
    SizeGuardExceeded { n: usize, guard: usize },
    #[error("no objects of size {0}")]
    EmptySize(usize),
    #[error("zero total mass")]
    ZeroMass,
    #[error("rejection budget of {0} attempts exceeded")]
    RejectionBudgetExceeded(u64),
    #[error("size {n} is not on the lattice {residue} mod {span}")]
    OffLattice { n: usize, span: usize, residue: usize },
    #[error("inner generating series is a polynomial; it is not subexponential")]
    InnerNotSubexponential,
    #[error("requested size {requested} exceeds truncation order {truncation}")]
    TruncationExceeded { requested: usize, truncation: usize },
    #[error("unknown species name `{0}`")]
    UnknownName(String),
    #[error("unsupported construction: {0}")]
    Unsupported(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("key spaces do not match: {0}")]
    KeyMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
