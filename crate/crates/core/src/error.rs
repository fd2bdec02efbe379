use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample: all counts are zero")]
    EmptySample,

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}` in schema")]
    DuplicateVariable(String),

    #[error("variable `{name}` has cardinality 0")]
    ZeroCardinality { name: String },

    #[error("schema has {states} joint states, above the limit of {limit}")]
    TooManyStates { states: u128, limit: usize },

    #[error("variable sets overlap on `{0}`")]
    OverlappingVariables(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid probability table: {0}")]
    InvalidDistribution(String),

    #[error("group {group} has zero probability mass")]
    ZeroMassGroup { group: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error(
        "solver did not converge after {iters} iterations (best value {best:.6e}, residual {residual:.3e})"
    )]
    NonConvergence { iters: usize, best: f64, residual: f64 },

    #[error("decomposition term {term} = {value:.3e} is below the tolerated floor")]
    NegativeTerm { term: &'static str, value: f64 },

    #[error("unreachable partition target: {0}")]
    UnreachableTarget(String),

    #[error("malformed input in {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    FeatureDimension { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
