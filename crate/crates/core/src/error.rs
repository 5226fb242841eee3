use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node {node} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("duplicate node {0} in {1}")]
    DuplicateNode(usize, &'static str),
    #[error("input/output size mismatch: |I| = {inputs}, |O| = {outputs}")]
    IoMismatch { inputs: usize, outputs: usize },
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
    #[error("invalid connection: {0}")]
    InvalidConnection(String),
    #[error("non feed-forward geometry: {0}")]
    NonFeedForward(String),
    #[error("graph has no causal flow")]
    NoFlow,
    #[error("flow does not match graph: {0}")]
    FlowMismatch(String),
    #[error("measurement pattern: {0}")]
    Pattern(String),
    #[error("node {0} is not on any f-path")]
    OffPath(usize),
    #[error("dimension {qubits} qubits exceeds limit {limit}")]
    DimensionOverflow { qubits: usize, limit: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("empty dataset split: {0}")]
    EmptySplit(&'static str),
    #[error("role assignment: {0}")]
    Role(String),
    #[error("search space too large: {0} nodes in one window")]
    SearchTooLarge(usize),
    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
