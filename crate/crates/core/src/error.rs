use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("odot product undefined: distributions have disjoint supports")]
    UndefinedProduct,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("split violates the {condition} condition: {detail}")]
    InfeasibleSplit {
        condition: &'static str,
        detail: String,
    },

    #[error("tree depth {depth} exceeds cap {cap}")]
    DepthCap { depth: usize, cap: usize },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("decomposition does not match the law's prior (total variation {0:e})")]
    DecompositionMismatch(f64),

    #[error("leaf posterior is not a product distribution (deviation {0:e})")]
    NonProductLeaf(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
