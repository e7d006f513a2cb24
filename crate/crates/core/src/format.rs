//! The JSON interchange format.
//!
//! Every file is a document `{"schema_version": "1", "kind": ..., "payload": ...}`.
//! Serialization is canonical: keys are sorted, scalars are strings in lowest
//! terms (`"3"`, `"1/2"`), and every vertex carries an explicit weight where
//! the kind has weights.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{AbstractCurve, ComplexDivisor, ComplexMorphism, CurveCover, CurveDivisor, GammaPoint, MetrizedComplex};
use crate::divisor::Divisor;
use crate::error::Error;
use crate::generators::Instance;
use crate::graph::{EdgeId, Multigraph, PointId, VertexId};
use crate::metric::{MetricModel, PseudoMetricGraph, WeightedMetricGraph};
use crate::morphism::{Category, EdgeImage, GraphMorphism, IndexedMorphism, MetricMorphism, WeightedMetricMorphism};
use crate::scalar::{as_string, parse_scalar, Scalar};
use crate::weighted::WeightedGraph;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at {path} ({line}:{column}): {message}")]
    Schema { path: String, line: usize, column: usize, message: String },
    #[error("invariant error at {path}: {message}")]
    Invariant { path: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl FormatError {
    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::Syntax { .. } => "syntax_error",
            FormatError::Schema { .. } => "schema_error",
            FormatError::Invariant { .. } => "invariant_error",
            FormatError::Io { .. } => "io_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Graph,
    WeightedGraph,
    MetricGraph,
    WeightedMetricGraph,
    Complex,
    Morphism,
    Divisor,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Graph => "graph",
            Kind::WeightedGraph => "weighted_graph",
            Kind::MetricGraph => "metric_graph",
            Kind::WeightedMetricGraph => "weighted_metric_graph",
            Kind::Complex => "complex",
            Kind::Morphism => "morphism",
            Kind::Divisor => "divisor",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A category object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Object<S> {
    Graph(Multigraph),
    Weighted(WeightedGraph),
    Metric(MetricModel<S>),
    /// A metric graph whose loops may have length zero.
    PseudoMetric(PseudoMetricGraph<S>),
    WeightedMetric(WeightedMetricGraph<S>),
    Complex(MetrizedComplex<S>),
}

impl<S: Scalar> Object<S> {
    pub fn kind(&self) -> Kind {
        match self {
            Object::Graph(_) => Kind::Graph,
            Object::Weighted(_) => Kind::WeightedGraph,
            Object::Metric(_) | Object::PseudoMetric(_) => Kind::MetricGraph,
            Object::WeightedMetric(_) => Kind::WeightedMetricGraph,
            Object::Complex(_) => Kind::Complex,
        }
    }

    pub fn graph(&self) -> &Multigraph {
        match self {
            Object::Graph(g) => g,
            Object::Weighted(g) => g.graph(),
            Object::Metric(g) => g.graph(),
            Object::PseudoMetric(g) => g.graph(),
            Object::WeightedMetric(g) => g.graph(),
            Object::Complex(c) => c.graph(),
        }
    }

    /// Genus in the object's own category.
    pub fn genus(&self) -> crate::error::Result<u64> {
        Ok(match self {
            Object::Graph(g) => g.genus(),
            Object::Weighted(g) => g.genus(),
            Object::Metric(g) => g.genus(),
            Object::PseudoMetric(g) => g.to_weighted()?.genus(),
            Object::WeightedMetric(g) => g.genus(),
            Object::Complex(c) => c.genus(),
        })
    }

    pub fn canonical_divisor(&self) -> crate::error::Result<AnyDivisor<S>> {
        Ok(match self {
            Object::Graph(g) => AnyDivisor::Vertex(crate::divisor::canonical_divisor(g)),
            Object::Weighted(g) => AnyDivisor::Vertex(g.canonical_divisor()),
            Object::Metric(g) => AnyDivisor::Vertex(g.canonical_divisor()),
            Object::PseudoMetric(g) => AnyDivisor::Vertex(g.to_weighted()?.canonical_divisor()),
            Object::WeightedMetric(g) => AnyDivisor::Vertex(g.canonical_divisor()),
            Object::Complex(c) => AnyDivisor::Complex(c.canonical_divisor()),
        })
    }
}

/// A divisor on model vertices or on a metrized complex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyDivisor<S: Ord> {
    Vertex(Divisor<VertexId>),
    Complex(ComplexDivisor<S>),
}

impl<S: Scalar> AnyDivisor<S> {
    pub fn degree(&self) -> i64 {
        match self {
            AnyDivisor::Vertex(d) => d.degree(),
            AnyDivisor::Complex(d) => d.degree(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Document<S: Ord> {
    Object(Object<S>),
    Morphism(Instance<S>),
    Divisor(AnyDivisor<S>),
}

impl<S: Scalar> Document<S> {
    pub fn kind(&self) -> Kind {
        match self {
            Document::Object(o) => o.kind(),
            Document::Morphism(_) => Kind::Morphism,
            Document::Divisor(_) => Kind::Divisor,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<P> {
    schema_version: String,
    kind: Kind,
    payload: P,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Head {
    schema_version: String,
    kind: Kind,
    #[allow(dead_code)]
    payload: serde::de::IgnoredAny,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
struct Sc<S: Scalar>(#[serde(with = "as_string")] S);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, [VertexId; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightedGraphDoc {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, [VertexId; 2]>,
    #[serde(default)]
    weights: BTreeMap<VertexId, u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
struct MetricGraphDoc<S: Scalar> {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, [VertexId; 2]>,
    lengths: BTreeMap<EdgeId, Sc<S>>,
    /// Allows zero-length loops.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pseudo: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
struct WeightedMetricGraphDoc<S: Scalar> {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, [VertexId; 2]>,
    lengths: BTreeMap<EdgeId, Sc<S>>,
    #[serde(default)]
    weights: BTreeMap<VertexId, u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveDoc {
    genus: u64,
    #[serde(default)]
    points: BTreeSet<PointId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    canonical: Option<BTreeMap<PointId, i64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
struct ComplexDoc<S: Scalar> {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, [VertexId; 2]>,
    lengths: BTreeMap<EdgeId, Sc<S>>,
    #[serde(default)]
    weights: BTreeMap<VertexId, u64>,
    curves: BTreeMap<VertexId, CurveDoc>,
    reductions: BTreeMap<VertexId, BTreeMap<EdgeId, PointId>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum EdgeImageDoc {
    Edge(EdgeId),
    Vertex(VertexId),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverPointDoc {
    image: PointId,
    #[serde(default = "one")]
    ramification: u64,
}

fn one() -> u64 {
    1
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverDoc {
    degree: u64,
    #[serde(default)]
    points: BTreeMap<PointId, CoverPointDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MorphismDoc<O> {
    category: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<O>,
    /// Path of an object document, relative to the morphism document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<O>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_file: Option<String>,
    vertex_map: BTreeMap<VertexId, VertexId>,
    edge_map: BTreeMap<EdgeId, EdgeImageDoc>,
    /// Weighted category only; defaults to 1 on horizontal and 0 on vertical edges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    indices: Option<BTreeMap<EdgeId, u64>>,
    /// Complex category only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covers: Option<BTreeMap<VertexId, CoverDoc>>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CurvePartDoc {
    #[serde(default)]
    points: BTreeMap<PointId, i64>,
    /// Degree of a canonical divisor known only by its degree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    symbolic: Option<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DivisorDoc {
    /// Keys are vertex ids or interior points written `edge@offset`.
    #[serde(default)]
    points: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    curves: Option<BTreeMap<VertexId, CurvePartDoc>>,
}

fn invariant(path: impl Into<String>, err: impl fmt::Display) -> FormatError {
    FormatError::Invariant { path: path.into(), message: err.to_string() }
}

/// Where in a payload the offending datum of `err` lives.
fn path_of(prefix: &str, err: &Error) -> String {
    let at = |field: &str, key: &dyn fmt::Display| format!("{prefix}.{field}.{key}");
    match err {
        Error::DuplicateVertex(_) | Error::EmptyId => format!("{prefix}.vertices"),
        Error::DuplicateEdge(e) => at("edges", e),
        Error::DanglingEndpoint { edge, .. } | Error::LoopNotAllowed { edge, .. } => at("edges", edge),
        Error::Disconnected(_) => format!("{prefix}.edges"),
        Error::WeightOnUnknownVertex(v) => at("weights", v),
        Error::MissingLength(e) | Error::LengthOnUnknownEdge(e) | Error::ZeroLengthNonLoop(e) => at("lengths", e),
        Error::NonPositiveLength { edge, .. } | Error::NegativeLength { edge, .. } => at("lengths", edge),
        Error::InvalidCurve { vertex, .. } => at("curves", vertex),
        Error::InvalidReduction { vertex, .. } => at("reductions", vertex),
        Error::InvalidCover { vertex, .. } => at("covers", vertex),
        Error::UnmappedVertex(v) => at("vertex_map", v),
        Error::UnmappedEdge(e) | Error::LoopImageOfNonLoop(e) => at("edge_map", e),
        Error::IncompatibleEdgeImage { edge, .. } | Error::NonIntegralSlope { edge, .. } => at("edge_map", edge),
        Error::MissingIndex(e) | Error::IndexVerticalMismatch(e) => at("indices", e),
        _ => prefix.to_string(),
    }
}

fn graph_from(
    prefix: &str,
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, [VertexId; 2]>,
) -> Result<Multigraph, FormatError> {
    let edges = edges.into_iter().map(|(e, [a, b])| (e, a, b));
    Multigraph::new(vertices, edges).map_err(|e| invariant(path_of(prefix, &e), e))
}

fn graph_doc(g: &Multigraph) -> (BTreeSet<VertexId>, BTreeMap<EdgeId, [VertexId; 2]>) {
    let edges = g.edges().map(|(e, ends)| (e.clone(), [ends.low().clone(), ends.high().clone()])).collect();
    (g.vertex_set().clone(), edges)
}

fn full_weights(g: &Multigraph, w: &BTreeMap<VertexId, u64>) -> BTreeMap<VertexId, u64> {
    g.vertices().map(|v| (v.clone(), w.get(v).copied().unwrap_or(0))).collect()
}

fn scalars<S: Scalar>(m: BTreeMap<EdgeId, Sc<S>>) -> BTreeMap<EdgeId, S> {
    m.into_iter().map(|(e, Sc(l))| (e, l)).collect()
}

fn sc_map<S: Scalar>(m: &BTreeMap<EdgeId, S>) -> BTreeMap<EdgeId, Sc<S>> {
    m.iter().map(|(e, l)| (e.clone(), Sc(l.clone()))).collect()
}

/// Decoding of one category's object payload.
trait ObjectCodec<S: Scalar>: Sized {
    type Doc: Serialize + DeserializeOwned;
    fn decode(doc: Self::Doc, prefix: &str) -> Result<Self, FormatError>;
    fn encode(&self) -> Self::Doc;
}

impl<S: Scalar> ObjectCodec<S> for Multigraph {
    type Doc = GraphDoc;

    fn decode(doc: GraphDoc, prefix: &str) -> Result<Self, FormatError> {
        graph_from(prefix, doc.vertices, doc.edges)
    }

    fn encode(&self) -> GraphDoc {
        let (vertices, edges) = graph_doc(self);
        GraphDoc { vertices, edges }
    }
}

impl<S: Scalar> ObjectCodec<S> for WeightedGraph {
    type Doc = WeightedGraphDoc;

    fn decode(doc: WeightedGraphDoc, prefix: &str) -> Result<Self, FormatError> {
        let g = graph_from(prefix, doc.vertices, doc.edges)?;
        WeightedGraph::new(g, doc.weights).map_err(|e| invariant(path_of(prefix, &e), e))
    }

    fn encode(&self) -> WeightedGraphDoc {
        let (vertices, edges) = graph_doc(self.graph());
        WeightedGraphDoc { vertices, edges, weights: full_weights(self.graph(), self.weights()) }
    }
}

impl<S: Scalar> ObjectCodec<S> for MetricModel<S> {
    type Doc = MetricGraphDoc<S>;

    fn decode(doc: MetricGraphDoc<S>, prefix: &str) -> Result<Self, FormatError> {
        let g = graph_from(prefix, doc.vertices, doc.edges)?;
        MetricModel::new(g, scalars(doc.lengths)).map_err(|e| invariant(path_of(prefix, &e), e))
    }

    fn encode(&self) -> MetricGraphDoc<S> {
        let (vertices, edges) = graph_doc(self.graph());
        MetricGraphDoc { vertices, edges, lengths: sc_map(self.lengths()), pseudo: false }
    }
}

impl<S: Scalar> ObjectCodec<S> for WeightedMetricGraph<S> {
    type Doc = WeightedMetricGraphDoc<S>;

    fn decode(doc: WeightedMetricGraphDoc<S>, prefix: &str) -> Result<Self, FormatError> {
        let g = graph_from(prefix, doc.vertices, doc.edges)?;
        let model = MetricModel::new(g, scalars(doc.lengths)).map_err(|e| invariant(path_of(prefix, &e), e))?;
        WeightedMetricGraph::new(model, doc.weights).map_err(|e| invariant(path_of(prefix, &e), e))
    }

    fn encode(&self) -> WeightedMetricGraphDoc<S> {
        let (vertices, edges) = graph_doc(self.graph());
        WeightedMetricGraphDoc {
            vertices,
            edges,
            lengths: sc_map(self.model().lengths()),
            weights: full_weights(self.graph(), self.weights()),
        }
    }
}

impl<S: Scalar> ObjectCodec<S> for MetrizedComplex<S> {
    type Doc = ComplexDoc<S>;

    fn decode(doc: ComplexDoc<S>, prefix: &str) -> Result<Self, FormatError> {
        let skeleton = WeightedMetricGraph::decode(
            WeightedMetricGraphDoc { vertices: doc.vertices, edges: doc.edges, lengths: doc.lengths, weights: doc.weights },
            prefix,
        )?;
        let curves = doc
            .curves
            .into_iter()
            .map(|(v, c)| {
                let curve = AbstractCurve::new(c.genus, c.points);
                let curve = match c.canonical {
                    Some(k) => curve.with_canonical(k.into_iter().collect()),
                    None => curve,
                };
                (v, curve)
            })
            .collect();
        MetrizedComplex::new(skeleton, curves, doc.reductions).map_err(|e| invariant(path_of(prefix, &e), e))
    }

    fn encode(&self) -> ComplexDoc<S> {
        let skeleton = self.skeleton().encode();
        let curves = self
            .curves()
            .iter()
            .map(|(v, c)| {
                let canonical = c.canonical.as_ref().map(|k| k.iter().map(|(p, n)| (p.clone(), n)).collect());
                (v.clone(), CurveDoc { genus: c.genus, points: c.points.clone(), canonical })
            })
            .collect();
        ComplexDoc {
            vertices: skeleton.vertices,
            edges: skeleton.edges,
            lengths: skeleton.lengths,
            weights: skeleton.weights,
            curves,
            reductions: self.reductions().clone(),
        }
    }
}

fn pseudo_decode<S: Scalar>(doc: MetricGraphDoc<S>, prefix: &str) -> Result<Object<S>, FormatError> {
    if !doc.pseudo {
        return MetricModel::decode(doc, prefix).map(Object::Metric);
    }
    let g = graph_from(prefix, doc.vertices, doc.edges)?;
    PseudoMetricGraph::new(g, scalars(doc.lengths))
        .map(Object::PseudoMetric)
        .map_err(|e| invariant(path_of(prefix, &e), e))
}

fn pseudo_encode<S: Scalar>(g: &PseudoMetricGraph<S>) -> MetricGraphDoc<S> {
    let (vertices, edges) = graph_doc(g.graph());
    MetricGraphDoc { vertices, edges, lengths: sc_map(g.pseudo_lengths()), pseudo: true }
}

fn schema_error(e: serde_path_to_error::Error<serde_json::Error>) -> FormatError {
    let path = match e.path().to_string() {
        p if p == "." => "$".to_string(),
        p => format!("$.{p}"),
    };
    let inner = e.into_inner();
    if inner.is_syntax() || inner.is_eof() {
        return FormatError::Syntax { line: inner.line(), column: inner.column(), message: inner.to_string() };
    }
    let message = inner.to_string();
    let message = match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message,
    };
    FormatError::Schema { path, line: inner.line(), column: inner.column(), message }
}

fn typed<T: DeserializeOwned>(text: &str) -> Result<T, FormatError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(schema_error)?;
    de.end().map_err(|e| FormatError::Syntax { line: e.line(), column: e.column(), message: e.to_string() })?;
    Ok(value)
}

fn payload<P: DeserializeOwned>(text: &str) -> Result<P, FormatError> {
    Ok(typed::<Envelope<P>>(text)?.payload)
}

/// Parses a document; `source_file`/`target_file` references resolve against `base`.
pub fn parse_in<S: Scalar>(text: &str, base: Option<&Path>) -> Result<Document<S>, FormatError> {
    serde_json::from_str::<serde_json::Value>(text)
        .map_err(|e| FormatError::Syntax { line: e.line(), column: e.column(), message: e.to_string() })?;
    let head: Head = typed(text)?;
    if head.schema_version != SCHEMA_VERSION {
        return Err(FormatError::Schema {
            path: "$.schema_version".into(),
            line: 1,
            column: 1,
            message: format!("unsupported schema version {:?}", head.schema_version),
        });
    }
    let p = "payload";
    Ok(match head.kind {
        Kind::Graph => Document::Object(Object::Graph(<Multigraph as ObjectCodec<S>>::decode(payload(text)?, p)?)),
        Kind::WeightedGraph => {
            Document::Object(Object::Weighted(<WeightedGraph as ObjectCodec<S>>::decode(payload(text)?, p)?))
        }
        Kind::MetricGraph => Document::Object(pseudo_decode(payload(text)?, p)?),
        Kind::WeightedMetricGraph => {
            Document::Object(Object::WeightedMetric(WeightedMetricGraph::decode(payload(text)?, p)?))
        }
        Kind::Complex => Document::Object(Object::Complex(MetrizedComplex::decode(payload(text)?, p)?)),
        Kind::Divisor => Document::Divisor(divisor_decode(payload(text)?)?),
        Kind::Morphism => {
            let doc: MorphismDoc<serde_json::Value> = payload(text)?;
            Document::Morphism(morphism_decode(doc, base)?)
        }
    })
}

pub fn parse<S: Scalar>(text: &str) -> Result<Document<S>, FormatError> {
    parse_in(text, None)
}

pub fn parse_file<S: Scalar>(path: &Path) -> Result<Document<S>, FormatError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FormatError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_in(&text, path.parent())
}

fn divisor_decode<S: Scalar>(doc: DivisorDoc) -> Result<AnyDivisor<S>, FormatError> {
    let interior = doc.points.keys().any(|k| k.contains('@'));
    if doc.curves.is_none() && !interior {
        return Ok(AnyDivisor::Vertex(doc.points.into_iter().map(|(v, n)| (VertexId::new(v), n)).collect()));
    }
    let mut graphical = Divisor::zero();
    for (key, n) in doc.points {
        let point = match key.split_once('@') {
            None => GammaPoint::Vertex(VertexId::new(key)),
            Some((e, off)) => {
                let offset = parse_scalar::<S>(off)
                    .ok_or_else(|| invariant(format!("payload.points.{key}"), "offset is not a rational number"))?;
                GammaPoint::Interior { edge: EdgeId::new(e), offset }
            }
        };
        graphical.add_at(point, n);
    }
    let per_curve = doc
        .curves
        .unwrap_or_default()
        .into_iter()
        .map(|(v, c)| (v, CurveDivisor { points: c.points.into_iter().collect(), symbolic: c.symbolic }))
        .filter(|(_, c)| !c.is_zero())
        .collect();
    Ok(AnyDivisor::Complex(ComplexDivisor { graphical, per_curve }))
}

fn divisor_encode<S: Scalar>(d: &AnyDivisor<S>) -> DivisorDoc {
    match d {
        AnyDivisor::Vertex(d) => {
            DivisorDoc { points: d.iter().map(|(v, n)| (v.to_string(), n)).collect(), curves: None }
        }
        AnyDivisor::Complex(d) => {
            let curves = d
                .per_curve
                .iter()
                .map(|(v, c)| {
                    let points = c.points.iter().map(|(p, n)| (p.clone(), n)).collect();
                    (v.clone(), CurvePartDoc { points, symbolic: c.symbolic })
                })
                .collect();
            DivisorDoc { points: d.graphical.iter().map(|(p, n)| (p.to_string(), n)).collect(), curves: Some(curves) }
        }
    }
}

/// Resolves an inline or referenced object of the morphism's category.
fn endpoint<S: Scalar, O: ObjectCodec<S>>(
    inline: Option<serde_json::Value>,
    file: Option<String>,
    base: Option<&Path>,
    field: &str,
) -> Result<O, FormatError> {
    let prefix = format!("payload.{field}");
    match (inline, file) {
        (Some(v), None) => {
            let doc = serde_path_to_error::deserialize(v).map_err(|e| FormatError::Schema {
                path: format!("$.{prefix}.{}", e.path()),
                line: 0,
                column: 0,
                message: e.into_inner().to_string(),
            })?;
            O::decode(doc, &prefix)
        }
        (None, Some(f)) => {
            let path: PathBuf = base.map_or_else(|| PathBuf::from(&f), |b| b.join(&f));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| FormatError::Io { path: path.display().to_string(), message: e.to_string() })?;
            let env: Envelope<O::Doc> = typed(&text)?;
            O::decode(env.payload, &prefix)
        }
        _ => Err(FormatError::Schema {
            path: format!("$.{prefix}"),
            line: 0,
            column: 0,
            message: format!("exactly one of {field} and {field}_file is required"),
        }),
    }
}

fn morphism_decode<S: Scalar>(
    doc: MorphismDoc<serde_json::Value>,
    base: Option<&Path>,
) -> Result<Instance<S>, FormatError> {
    let vertex_map = doc.vertex_map;
    let edge_map = doc
        .edge_map
        .into_iter()
        .map(|(e, img)| {
            let img = match img {
                EdgeImageDoc::Edge(f) => EdgeImage::Edge(f),
                EdgeImageDoc::Vertex(v) => EdgeImage::Vertex(v),
            };
            (e, img)
        })
        .collect();
    let wrong = |field: &str| FormatError::Schema {
        path: format!("$.payload.{field}"),
        line: 0,
        column: 0,
        message: format!("{field} is not used by {} morphisms", doc.category),
    };
    if doc.indices.is_some() && doc.category != Category::Weighted {
        return Err(wrong("indices"));
    }
    if doc.covers.is_some() && doc.category != Category::Complex {
        return Err(wrong("covers"));
    }
    let p = "payload";
    let fail = |e: Error| invariant(path_of(p, &e), e);
    macro_rules! ends {
        ($t:ty) => {{
            let s: $t = endpoint::<S, $t>(doc.source, doc.source_file, base, "source")?;
            let t: $t = endpoint::<S, $t>(doc.target, doc.target_file, base, "target")?;
            (s, t)
        }};
    }
    macro_rules! map_of {
        ($s:expr, $t:expr) => {
            GraphMorphism::new($s.clone(), $t.clone(), vertex_map, edge_map).map_err(fail)?
        };
    }
    Ok(match doc.category {
        Category::Finite => {
            let (s, t) = ends!(Multigraph);
            Instance::Finite(map_of!(s, t))
        }
        Category::Weighted => {
            let (s, t) = ends!(WeightedGraph);
            let map = map_of!(s.graph(), t.graph());
            let m = match doc.indices {
                Some(ix) => IndexedMorphism::new(s, t, map, ix),
                None => IndexedMorphism::simple(s, t, map),
            };
            Instance::Weighted(m.map_err(fail)?)
        }
        Category::Metric => {
            let (s, t) = ends!(MetricModel<S>);
            let map = map_of!(s.graph(), t.graph());
            Instance::Metric(MetricMorphism::new(s, t, map).map_err(fail)?)
        }
        Category::WeightedMetric => {
            let (s, t) = ends!(WeightedMetricGraph<S>);
            let map = map_of!(s.graph(), t.graph());
            Instance::WeightedMetric(WeightedMetricMorphism::new(s, t, map).map_err(fail)?)
        }
        Category::Complex => {
            let (s, t) = ends!(MetrizedComplex<S>);
            let map = map_of!(s.graph(), t.graph());
            let covers = doc
                .covers
                .unwrap_or_default()
                .into_iter()
                .map(|(v, c)| {
                    let cover = c
                        .points
                        .into_iter()
                        .fold(CurveCover::new(c.degree), |cv, (x, pt)| cv.with_point(x, pt.image, pt.ramification));
                    (v, cover)
                })
                .collect();
            Instance::Complex(ComplexMorphism::new(s, t, map, covers).map_err(fail)?)
        }
    })
}

fn edge_map_doc(map: &GraphMorphism) -> BTreeMap<EdgeId, EdgeImageDoc> {
    map.edge_map()
        .iter()
        .map(|(e, img)| {
            let img = match img {
                EdgeImage::Edge(f) => EdgeImageDoc::Edge(f.clone()),
                EdgeImage::Vertex(v) => EdgeImageDoc::Vertex(v.clone()),
            };
            (e.clone(), img)
        })
        .collect()
}

fn to_value<T: Serialize>(t: &T) -> serde_json::Value {
    serde_json::to_value(t).expect("documents serialize")
}

fn morphism_encode<S: Scalar>(m: &Instance<S>) -> MorphismDoc<serde_json::Value> {
    let map = m.morphism().map();
    let (source, target) = match m {
        Instance::Finite(g) => (
            to_value(&<Multigraph as ObjectCodec<S>>::encode(g.source())),
            to_value(&<Multigraph as ObjectCodec<S>>::encode(g.target())),
        ),
        Instance::Weighted(w) => (
            to_value(&<WeightedGraph as ObjectCodec<S>>::encode(w.source())),
            to_value(&<WeightedGraph as ObjectCodec<S>>::encode(w.target())),
        ),
        Instance::Metric(x) => (to_value(&x.source().encode()), to_value(&x.target().encode())),
        Instance::WeightedMetric(x) => (to_value(&x.source().encode()), to_value(&x.target().encode())),
        Instance::Complex(x) => (to_value(&x.source().encode()), to_value(&x.target().encode())),
    };
    let indices = match m {
        Instance::Weighted(w) => Some(w.indices().clone()),
        _ => None,
    };
    let covers = match m {
        Instance::Complex(x) => Some(
            x.covers()
                .iter()
                .map(|(v, c)| {
                    let points = c
                        .point_map
                        .iter()
                        .map(|(p, y)| (p.clone(), CoverPointDoc { image: y.clone(), ramification: c.ramification_index(p) }))
                        .collect();
                    (v.clone(), CoverDoc { degree: c.degree, points })
                })
                .collect(),
        ),
        _ => None,
    };
    MorphismDoc {
        category: m.category(),
        source: Some(source),
        source_file: None,
        target: Some(target),
        target_file: None,
        vertex_map: map.vertex_map().clone(),
        edge_map: edge_map_doc(map),
        indices,
        covers,
    }
}

fn payload_value<S: Scalar>(doc: &Document<S>) -> serde_json::Value {
    match doc {
        Document::Object(Object::Graph(g)) => to_value(&<Multigraph as ObjectCodec<S>>::encode(g)),
        Document::Object(Object::Weighted(g)) => to_value(&<WeightedGraph as ObjectCodec<S>>::encode(g)),
        Document::Object(Object::Metric(g)) => to_value(&g.encode()),
        Document::Object(Object::PseudoMetric(g)) => to_value(&pseudo_encode(g)),
        Document::Object(Object::WeightedMetric(g)) => to_value(&g.encode()),
        Document::Object(Object::Complex(c)) => to_value(&c.encode()),
        Document::Morphism(m) => to_value(&morphism_encode(m)),
        Document::Divisor(d) => to_value(&divisor_encode(d)),
    }
}

/// Canonical text: sorted keys, two-space indentation, trailing newline.
pub fn serialize<S: Scalar>(doc: &Document<S>) -> String {
    let env = Envelope { schema_version: SCHEMA_VERSION.to_string(), kind: doc.kind(), payload: payload_value(doc) };
    to_text(&env)
}

/// Renders any serializable value with sorted keys.
pub fn to_text<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(&to_value(value)).expect("values serialize");
    text.push('\n');
    text
}
