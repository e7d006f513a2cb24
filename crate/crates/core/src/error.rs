use thiserror::Error;

use crate::graph::{EdgeId, VertexId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A vertex at which the per-edge fiber counts disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotHarmonicWitness {
    pub vertex: VertexId,
    pub image: VertexId,
    pub first: (EdgeId, u64),
    pub second: (EdgeId, u64),
}

impl std::fmt::Display for NotHarmonicWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "at {} (image {}): edge {} receives {} but edge {} receives {}",
            self.vertex, self.image, self.first.0, self.first.1, self.second.0, self.second.1
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("identifier must be non-empty")]
    EmptyId,
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(VertexId),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(EdgeId),
    #[error("edge {edge} references undeclared vertex {vertex}")]
    DanglingEndpoint { edge: EdgeId, vertex: VertexId },
    #[error("graph is not connected ({0} components)")]
    Disconnected(usize),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),

    #[error("loop {edge} at {vertex} not allowed here; convert loop to +1 weight at {vertex}")]
    LoopNotAllowed { edge: EdgeId, vertex: VertexId },
    #[error("weight given for unknown vertex {0}")]
    WeightOnUnknownVertex(VertexId),

    #[error("edge {0} has no length")]
    MissingLength(EdgeId),
    #[error("length given for unknown edge {0}")]
    LengthOnUnknownEdge(EdgeId),
    #[error("edge {edge} has non-positive length {length}")]
    NonPositiveLength { edge: EdgeId, length: String },
    #[error("edge {0} has zero length but is not a loop")]
    ZeroLengthNonLoop(EdgeId),
    #[error("edge {edge} has negative pseudo-length {length}")]
    NegativeLength { edge: EdgeId, length: String },
    #[error("split point {at} is outside edge {edge}")]
    OutOfRange { edge: EdgeId, at: String },
    #[error("metric graph is a circle; keep at least one marked vertex")]
    IsCircle,
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,

    #[error("vertex {0} has no image")]
    UnmappedVertex(VertexId),
    #[error("edge {0} has no image")]
    UnmappedEdge(EdgeId),
    #[error("edge {edge} is mapped inconsistently with its endpoints: {reason}")]
    IncompatibleEdgeImage { edge: EdgeId, reason: String },
    #[error("map entry for {0}, which is not in the source")]
    StrayMapEntry(String),
    #[error("non-loop edge {0} is mapped onto a loop")]
    LoopImageOfNonLoop(EdgeId),
    #[error("edge {0} has no index")]
    MissingIndex(EdgeId),
    #[error("edge {0}: index must be 0 exactly when the edge is vertical")]
    IndexVerticalMismatch(EdgeId),
    #[error("edge {edge}: length ratio {ratio} is not a positive integer")]
    NonIntegralSlope { edge: EdgeId, ratio: String },
    #[error("not harmonic {0}")]
    NotHarmonicAt(Box<NotHarmonicWitness>),
    #[error("degree is not well defined: {0}")]
    InconsistentDegree(String),
    #[error("morphism is not harmonic: {0}")]
    NotHarmonic(String),

    #[error("curve at {vertex}: {reason}")]
    InvalidCurve { vertex: VertexId, reason: String },
    #[error("reduction at {vertex}: {reason}")]
    InvalidReduction { vertex: VertexId, reason: String },
    #[error("cover at {vertex}: {reason}")]
    InvalidCover { vertex: VertexId, reason: String },
    #[error("curve at {0} has no explicit canonical divisor")]
    MissingCanonicalRep(VertexId),
    #[error("fiber of {point} on the curve at {vertex} is not fully declared")]
    UndeclaredFiber { vertex: VertexId, point: String },
    #[error("point {0} is not a vertex; pullback is only defined on model vertices and curve points")]
    UnsupportedPoint(String),

    #[error("target {0} is not a vertex of the target graph")]
    UnknownTarget(VertexId),
    #[error("target {0} listed twice")]
    DuplicateTarget(VertexId),
    #[error("at least one target vertex is required")]
    NoTargets,
    #[error("unknown category {0}")]
    UnknownCategory(String),
    #[error("term {term} does not appear in the {category} inequality")]
    InapplicableTerm { category: String, term: &'static str },
    #[error("{0} target vertices is too many to enumerate every subset")]
    TooManyTargets(usize),

    #[error("{0} is not a cut vertex separating the given side")]
    NotACutVertex(VertexId),
    #[error("collapsed target would have a single vertex")]
    TargetTooSmall,
    #[error("generator gave up after {0} attempts")]
    BudgetExceeded(usize),
    #[error("invalid generator bounds: {0}")]
    InvalidSpec(String),
}
