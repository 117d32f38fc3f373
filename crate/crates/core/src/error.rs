use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex index {index} out of range for a graph with {count} vertices")]
    VertexOutOfRange { index: usize, count: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge ({i}, {j}) has non-positive weight {weight}")]
    NonPositiveWeight { i: usize, j: usize, weight: f64 },
    #[error("vertex {0} has no incident edges")]
    IsolatedVertex(usize),
    #[error("graph is disconnected: vertex {vertex} is not reachable from vertex {from}")]
    Disconnected { from: usize, vertex: usize },
    #[error("dimension mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("no admissible nonzero functions")]
    TrivialSubspace,
    #[error("function leaves the admissible set (residual {0:e})")]
    Inadmissible(f64),
    #[error("weight incompatible: the denominator is nonpositive on every admissible function")]
    WeightIncompatible,
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error("no mountain geometry: energy stayed nonnegative after {0} ray doublings")]
    NoMountainGeometry(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
