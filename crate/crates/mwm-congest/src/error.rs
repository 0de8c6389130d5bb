use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("loop edge ({0}, {0})")]
    LoopEdge(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex id {id} out of range for n = {n}")]
    VertexOutOfRange { id: usize, n: usize },
    #[error("edge ({0}, {1}) not in graph")]
    EdgeNotInGraph(usize, usize),
    #[error("edge ({0}, {1}) has no weight")]
    MissingWeight(usize, usize),
    #[error("instance exceeds exact-oracle scale bound (n = {n}, m = {m})")]
    ScaleBound { n: usize, m: usize },
    #[error("weight below 1: {0}")]
    WeightBelowOne(String),
    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    EpsilonRange(String),
    #[error("base must exceed 1, got {0}")]
    BaseRange(String),
    #[error("denominator must be nonzero")]
    ZeroDenominator,
    #[error("weight must be negative-free and at least 1 for rounding, got {0}")]
    RoundDomain(String),
    #[error("epsilon decay needs t >= 2, got t = {0}")]
    DecayDomain(usize),
    #[error("cannot merge or raise a single weight class")]
    SingleClass,
    #[error("merge premise violated: gap {gap} exceeds {threshold}")]
    MergePremise { gap: String, threshold: String },
    #[error("edge weight {0} is not among the declared class values")]
    UnknownClassWeight(String),
    #[error("argument outside (0, 1): {0}")]
    UnitIntervalDomain(f64),
    #[error("encoded value {value} exceeds the poly(n) bound {bound}")]
    PolyBoundExceeded { value: String, bound: String },
    #[error("bit string too short to decode")]
    DecodeUnderflow,
    #[error("node {node} -> neighbor {neighbor} in round {round}: payload {bits} bits exceeds capacity {capacity}")]
    CapacityExceeded {
        node: usize,
        neighbor: usize,
        round: usize,
        bits: usize,
        capacity: usize,
    },
    #[error("node program failed at node {node}, round {round}: {message}")]
    NodeProgram {
        node: usize,
        round: usize,
        message: String,
    },
    #[error("nodes disagree on epsilon_unweighted (node {0})")]
    Disagreement(usize),
    #[error("protocol did not converge within {0} rounds")]
    RoundLimit(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("infeasible edge count m = {m} for n = {n}")]
    InfeasibleEdgeCount { n: usize, m: usize },
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("json error: {0}")]
    Json(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
