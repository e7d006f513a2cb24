//! Morphisms of finite, weighted, metric and weighted metric graphs, and the
//! shared machinery that decides harmonicity and computes multiplicities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::divisor::Divisor;
use crate::error::{Error, NotHarmonicWitness, Result};
use crate::graph::{EdgeId, Multigraph, VertexId};
use crate::metric::{MetricModel, WeightedMetricGraph};
use crate::scalar::{format_scalar, Scalar};
use crate::weighted::{reject_loops, WeightedGraph};

/// The five categories of objects the library knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Finite,
    Weighted,
    Metric,
    WeightedMetric,
    Complex,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Finite,
        Category::Weighted,
        Category::Metric,
        Category::WeightedMetric,
        Category::Complex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Finite => "finite",
            Category::Weighted => "weighted",
            Category::Metric => "metric",
            Category::WeightedMetric => "weighted_metric",
            Category::Complex => "complex",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCategory(s.to_owned()))
    }
}

/// Where an edge goes: onto an edge, or collapsed onto a vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeImage {
    Edge(EdgeId),
    Vertex(VertexId),
}

/// A morphism of multigraphs: vertices to vertices, edges to edges or vertices,
/// compatibly with endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMorphism {
    source: Multigraph,
    target: Multigraph,
    vertex_map: BTreeMap<VertexId, VertexId>,
    edge_map: BTreeMap<EdgeId, EdgeImage>,
    loopless: Option<Box<GraphMorphism>>,
}

impl GraphMorphism {
    pub fn new(
        source: Multigraph,
        target: Multigraph,
        vertex_map: BTreeMap<VertexId, VertexId>,
        edge_map: BTreeMap<EdgeId, EdgeImage>,
    ) -> Result<Self> {
        for v in vertex_map.keys() {
            if !source.has_vertex(v) {
                return Err(Error::StrayMapEntry(v.to_string()));
            }
        }
        for e in edge_map.keys() {
            if !source.has_edge(e) {
                return Err(Error::StrayMapEntry(e.to_string()));
            }
        }
        for v in source.vertices() {
            let image = vertex_map.get(v).ok_or_else(|| Error::UnmappedVertex(v.clone()))?;
            if !target.has_vertex(image) {
                return Err(Error::UnknownVertex(image.clone()));
            }
        }
        for (e, ends) in source.edges() {
            let image = edge_map.get(e).ok_or_else(|| Error::UnmappedEdge(e.clone()))?;
            let (a, b) = (&vertex_map[ends.low()], &vertex_map[ends.high()]);
            match image {
                EdgeImage::Vertex(u) => {
                    if !target.has_vertex(u) {
                        return Err(Error::UnknownVertex(u.clone()));
                    }
                    if a != u || b != u {
                        return Err(Error::IncompatibleEdgeImage {
                            edge: e.clone(),
                            reason: format!("collapsed to {u} but its endpoints go to {a} and {b}"),
                        });
                    }
                }
                EdgeImage::Edge(f) => {
                    let target_ends = target.endpoints(f)?;
                    if target_ends.is_loop() && !ends.is_loop() {
                        return Err(Error::LoopImageOfNonLoop(e.clone()));
                    }
                    let matches = (target_ends.low() == a && target_ends.high() == b)
                        || (target_ends.low() == b && target_ends.high() == a);
                    if !matches {
                        return Err(Error::IncompatibleEdgeImage {
                            edge: e.clone(),
                            reason: format!(
                                "image {f} joins {} and {} but the endpoints go to {a} and {b}",
                                target_ends.low(),
                                target_ends.high()
                            ),
                        });
                    }
                }
            }
        }
        let mut m = GraphMorphism { source, target, vertex_map, edge_map, loopless: None };
        if m.source.has_loops() || m.target.has_loops() {
            m.loopless = Some(Box::new(m.subdivide_loops()));
        }
        Ok(m)
    }

    /// Builds a morphism from string slices; edge images name a target edge
    /// unless prefixed with `@`, which names a target vertex.
    pub fn build(
        source: Multigraph,
        target: Multigraph,
        vertex_map: &[(&str, &str)],
        edge_map: &[(&str, &str)],
    ) -> Result<Self> {
        let vertex_map = vertex_map.iter().map(|(a, b)| ((*a).into(), (*b).into())).collect();
        let edge_map = edge_map
            .iter()
            .map(|(e, img)| {
                let img = match img.strip_prefix('@') {
                    Some(v) => EdgeImage::Vertex(v.into()),
                    None => EdgeImage::Edge((*img).into()),
                };
                ((*e).into(), img)
            })
            .collect();
        Self::new(source, target, vertex_map, edge_map)
    }

    pub fn identity(g: &Multigraph) -> Self {
        let vertex_map = g.vertices().map(|v| (v.clone(), v.clone())).collect();
        let edge_map = g.edge_ids().map(|e| (e.clone(), EdgeImage::Edge(e.clone()))).collect();
        Self::new(g.clone(), g.clone(), vertex_map, edge_map).expect("identity is a morphism")
    }

    /// `next` after `self`.
    pub fn then(&self, next: &GraphMorphism) -> Result<GraphMorphism> {
        if self.target != next.source {
            return Err(Error::IncompatibleEdgeImage {
                edge: EdgeId::new("*"),
                reason: "the first target is not the second source".into(),
            });
        }
        let vertex_map = self.vertex_map.iter().map(|(v, w)| (v.clone(), next.vertex_map[w].clone())).collect();
        let edge_map = self
            .edge_map
            .iter()
            .map(|(e, img)| {
                let img = match img {
                    EdgeImage::Vertex(w) => EdgeImage::Vertex(next.vertex_map[w].clone()),
                    EdgeImage::Edge(f) => next.edge_map[f].clone(),
                };
                (e.clone(), img)
            })
            .collect();
        Self::new(self.source.clone(), next.target.clone(), vertex_map, edge_map)
    }

    pub fn source(&self) -> &Multigraph {
        &self.source
    }

    pub fn target(&self) -> &Multigraph {
        &self.target
    }

    pub fn vertex_map(&self) -> &BTreeMap<VertexId, VertexId> {
        &self.vertex_map
    }

    pub fn edge_map(&self) -> &BTreeMap<EdgeId, EdgeImage> {
        &self.edge_map
    }

    pub fn image(&self, v: &VertexId) -> Result<&VertexId> {
        self.vertex_map.get(v).ok_or_else(|| Error::UnknownVertex(v.clone()))
    }

    pub fn edge_image(&self, e: &EdgeId) -> Result<&EdgeImage> {
        self.edge_map.get(e).ok_or_else(|| Error::UnknownEdge(e.clone()))
    }

    pub fn is_vertical(&self, e: &EdgeId) -> bool {
        matches!(self.edge_map.get(e), Some(EdgeImage::Vertex(_)))
    }

    /// The same morphism after cutting every loop of source and target at a
    /// midpoint. Returns `self` when neither graph has loops.
    pub fn working(&self) -> &GraphMorphism {
        self.loopless.as_deref().unwrap_or(self)
    }

    fn subdivide_loops(&self) -> GraphMorphism {
        let (source, source_splits) = self.source.split_loops();
        let (target, target_splits) = self.target.split_loops();
        let mut vertex_map = self.vertex_map.clone();
        let mut edge_map: BTreeMap<EdgeId, EdgeImage> = self
            .edge_map
            .iter()
            .filter(|(e, _)| !source_splits.contains_key(*e))
            .map(|(e, img)| (e.clone(), img.clone()))
            .collect();
        for (e, split) in &source_splits {
            match &self.edge_map[e] {
                EdgeImage::Vertex(u) => {
                    vertex_map.insert(split.midpoint.clone(), u.clone());
                    for h in &split.halves {
                        edge_map.insert(h.clone(), EdgeImage::Vertex(u.clone()));
                    }
                }
                EdgeImage::Edge(f) => {
                    let image = &target_splits[f];
                    vertex_map.insert(split.midpoint.clone(), image.midpoint.clone());
                    for (h, hf) in split.halves.iter().zip(&image.halves) {
                        edge_map.insert(h.clone(), EdgeImage::Edge(hf.clone()));
                    }
                }
            }
        }
        GraphMorphism { source, target, vertex_map, edge_map, loopless: None }
    }

    /// `V(v)`: vertical edges at `v`, a loop counted twice.
    pub fn vertical_multiplicity(&self, v: &VertexId) -> Result<u64> {
        if !self.source.has_vertex(v) {
            return Err(Error::UnknownVertex(v.clone()));
        }
        Ok(self
            .source
            .edges()
            .filter(|(e, _)| self.is_vertical(e))
            .map(|(_, ends)| ends.incidences(v) as u64)
            .sum())
    }

    /// `M(v)` for the plain (unindexed) morphism.
    pub fn horizontal_multiplicity(&self, v: &VertexId) -> Result<u64> {
        if !self.source.has_vertex(v) {
            return Err(Error::UnknownVertex(v.clone()));
        }
        let w = self.working();
        vertex_multiplicity(w, v, &|e| u64::from(!w.is_vertical(e)))
    }

    /// Harmonicity certificate with `mu(e) = 1` on horizontal and `0` on vertical edges.
    pub fn certify(&self) -> Result<Certificate> {
        let w = self.working();
        certify_with(w, &|e| u64::from(!w.is_vertical(e)))
    }

    pub fn is_harmonic(&self) -> bool {
        self.certify().is_ok()
    }

    pub fn degree(&self) -> Result<u64> {
        Ok(self.certify()?.degree)
    }

    /// `phi^*(D') = sum M(v) D'(phi(v)) (v)`.
    pub fn pullback(&self, d: &Divisor<VertexId>) -> Result<Divisor<VertexId>> {
        pullback_with(self, &self.certify()?, d)
    }

    /// `phi_*(D) = sum D(v) (phi(v))`.
    pub fn pushforward(&self, d: &Divisor<VertexId>) -> Result<Divisor<VertexId>> {
        let mut out = Divisor::zero();
        for (v, c) in d.iter() {
            out.add_at(self.image(v)?.clone(), c);
        }
        Ok(out)
    }

    /// True when every vertex goes to the same target vertex.
    pub fn is_constant(&self) -> bool {
        self.vertex_map.values().collect::<BTreeSet<_>>().len() == 1
    }

    pub fn is_surjective(&self) -> bool {
        let hit_vertices: BTreeSet<_> = self.vertex_map.values().collect();
        let hit_edges: BTreeSet<_> = self
            .edge_map
            .values()
            .filter_map(|img| match img {
                EdgeImage::Edge(f) => Some(f),
                EdgeImage::Vertex(_) => None,
            })
            .collect();
        hit_vertices.len() == self.target.vertex_count() && hit_edges.len() == self.target.edge_count()
    }
}

/// Per-vertex multiplicities and degree of a (pseudo-)harmonic morphism,
/// indexed by the vertices of the loopless working source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    /// `M(v)`.
    pub multiplicity: BTreeMap<VertexId, u64>,
    /// `V(v)`: number of vertical edges at `v`.
    pub vertical: BTreeMap<VertexId, u64>,
    pub degree: u64,
}

impl Certificate {
    pub fn multiplicity(&self, v: &VertexId) -> u64 {
        self.multiplicity.get(v).copied().unwrap_or(0)
    }

    pub fn vertical(&self, v: &VertexId) -> u64 {
        self.vertical.get(v).copied().unwrap_or(0)
    }

    /// Every vertex has `M(v) >= 1`.
    pub fn is_nondegenerate(&self) -> bool {
        self.multiplicity.values().all(|&m| m >= 1)
    }
}

/// The common weighted fiber count at `v`, or the witness that there is none.
pub(crate) fn vertex_multiplicity(
    map: &GraphMorphism,
    v: &VertexId,
    mu: &dyn Fn(&EdgeId) -> u64,
) -> Result<u64> {
    let image = &map.vertex_map[v];
    let mut received: BTreeMap<&EdgeId, u64> = BTreeMap::new();
    for e in map.source.incident_edges(v) {
        if let EdgeImage::Edge(f) = &map.edge_map[e] {
            *received.entry(f).or_default() += mu(e);
        }
    }
    let mut counts = map
        .target
        .incident_edges(image)
        .map(|f| (f, received.get(f).copied().unwrap_or(0)));
    let Some((first, m)) = counts.next() else {
        return Ok(0);
    };
    if let Some((second, n)) = counts.find(|(_, n)| *n != m) {
        return Err(Error::NotHarmonicAt(Box::new(NotHarmonicWitness {
            vertex: v.clone(),
            image: image.clone(),
            first: (first.clone(), m),
            second: (second.clone(), n),
        })));
    }
    Ok(m)
}

/// Decides (pseudo-)harmonicity of a loopless map for the edge weights `mu`
/// and cross-checks the degree over every target edge and vertex.
pub(crate) fn certify_with(map: &GraphMorphism, mu: &dyn Fn(&EdgeId) -> u64) -> Result<Certificate> {
    let mut multiplicity = BTreeMap::new();
    let mut vertical = BTreeMap::new();
    for v in map.source.vertices() {
        multiplicity.insert(v.clone(), vertex_multiplicity(map, v, mu)?);
        let vert = map
            .source
            .incident_edges(v)
            .filter(|e| map.is_vertical(e))
            .count() as u64;
        vertical.insert(v.clone(), vert);
    }
    let mut fibers: BTreeMap<&EdgeId, u64> = map.target.edge_ids().map(|f| (f, 0)).collect();
    for (e, img) in &map.edge_map {
        if let EdgeImage::Edge(f) = img {
            *fibers.get_mut(f).expect("validated image") += mu(e);
        }
    }
    let mut fiber_iter = fibers.iter();
    let degree = match fiber_iter.next() {
        None => 0,
        Some((first, &d)) => {
            if let Some((other, &d2)) = fiber_iter.find(|(_, &d2)| d2 != d) {
                return Err(Error::InconsistentDegree(format!(
                    "edge {first} has fiber size {d} but edge {other} has {d2}"
                )));
            }
            d
        }
    };
    let mut vertex_sums: BTreeMap<&VertexId, u64> = map.target.vertices().map(|v| (v, 0)).collect();
    for (v, m) in &multiplicity {
        *vertex_sums.get_mut(&map.vertex_map[v]).expect("validated image") += m;
    }
    if let Some((v, s)) = vertex_sums.iter().find(|(_, &s)| s != degree) {
        return Err(Error::InconsistentDegree(format!(
            "degree {degree} from edge fibers but multiplicities over {v} sum to {s}"
        )));
    }
    Ok(Certificate { multiplicity, vertical, degree })
}

pub(crate) fn pullback_with(
    map: &GraphMorphism,
    cert: &Certificate,
    d: &Divisor<VertexId>,
) -> Result<Divisor<VertexId>> {
    for v in d.support() {
        if !map.target.has_vertex(v) {
            return Err(Error::UnknownVertex(v.clone()));
        }
    }
    Ok(map
        .source
        .vertices()
        .map(|v| (v.clone(), cert.multiplicity(v) as i64 * d.get(&map.vertex_map[v])))
        .collect())
}

/// Shared view of the four graph-level morphism types (and of complex
/// morphisms), enough to state Riemann–Hurwitz and the second main theorem.
pub trait Morphism {
    fn category(&self) -> Category;

    /// The underlying map as given.
    fn map(&self) -> &GraphMorphism;

    /// `mu(e)` on the loopless working source: 1/0, the index, or the slope.
    fn edge_multiplicity(&self, e: &EdgeId) -> u64;

    fn source_weight(&self, _v: &VertexId) -> u64 {
        0
    }

    fn target_weight(&self, _v: &VertexId) -> u64 {
        0
    }

    /// Genus of the curve attached at a source vertex.
    fn source_curve_genus(&self, _v: &VertexId) -> u64 {
        0
    }

    fn target_curve_genus(&self, _v: &VertexId) -> u64 {
        0
    }

    /// The category's canonical divisor on the working source.
    fn source_canonical(&self) -> Divisor<VertexId>;

    /// The category's canonical divisor on the working target.
    fn target_canonical(&self) -> Divisor<VertexId>;

    fn certificate(&self) -> Result<Certificate> {
        certify_with(self.map().working(), &|e| self.edge_multiplicity(e))
    }

    fn source_genus(&self) -> u64 {
        let g = self.map().working().source();
        g.genus() + g.vertices().map(|v| self.source_weight(v) + self.source_curve_genus(v)).sum::<u64>()
    }

    fn target_genus(&self) -> u64 {
        let g = self.map().working().target();
        g.genus() + g.vertices().map(|v| self.target_weight(v) + self.target_curve_genus(v)).sum::<u64>()
    }

    /// Pullback on vertices of the source as given.
    fn pullback(&self, d: &Divisor<VertexId>) -> Result<Divisor<VertexId>> {
        let cert = self.certificate()?;
        let original = self.map().source();
        let full = pullback_with(self.map().working(), &cert, d)?;
        Ok(full.restrict(|v| original.has_vertex(v)))
    }

    fn pushforward(&self, d: &Divisor<VertexId>) -> Result<Divisor<VertexId>> {
        self.map().pushforward(d)
    }

    /// `R(v)` on the working source: the local Riemann–Hurwitz contribution
    /// `2(M-1) + 2(w - M w') + 2(g_v - M g_v') - sum_{e at v} (mu(e) - 1)`.
    fn local_ramification(&self, cert: &Certificate) -> BTreeMap<VertexId, i64> {
        let map = self.map().working();
        map.source()
            .vertices()
            .map(|v| {
                let image = &map.vertex_map[v];
                let m = cert.multiplicity(v) as i64;
                let excess: i64 = map
                    .source()
                    .incident_edges(v)
                    .map(|e| self.edge_multiplicity(e) as i64 - 1)
                    .sum();
                let weights = self.source_weight(v) as i64 - m * self.target_weight(image) as i64;
                let curves =
                    self.source_curve_genus(v) as i64 - m * self.target_curve_genus(image) as i64;
                (v.clone(), 2 * (m - 1) + 2 * weights + 2 * curves - excess)
            })
            .collect()
    }
}

impl Morphism for GraphMorphism {
    fn category(&self) -> Category {
        Category::Finite
    }

    fn map(&self) -> &GraphMorphism {
        self
    }

    fn edge_multiplicity(&self, e: &EdgeId) -> u64 {
        u64::from(!self.working().is_vertical(e))
    }

    fn certificate(&self) -> Result<Certificate> {
        self.certify()
    }

    fn source_canonical(&self) -> Divisor<VertexId> {
        crate::divisor::canonical_divisor(self.working().source())
    }

    fn target_canonical(&self) -> Divisor<VertexId> {
        crate::divisor::canonical_divisor(self.working().target())
    }
}

/// A morphism of loopless weighted graphs with an index `r(e)` on every edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedMorphism {
    source: WeightedGraph,
    target: WeightedGraph,
    map: GraphMorphism,
    indices: BTreeMap<EdgeId, u64>,
}

fn check_edge_numbers(map: &GraphMorphism, numbers: &BTreeMap<EdgeId, u64>) -> Result<()> {
    for e in numbers.keys() {
        if !map.source().has_edge(e) {
            return Err(Error::StrayMapEntry(e.to_string()));
        }
    }
    for e in map.source().edge_ids() {
        let r = *numbers.get(e).ok_or_else(|| Error::MissingIndex(e.clone()))?;
        if (r == 0) != map.is_vertical(e) {
            return Err(Error::IndexVerticalMismatch(e.clone()));
        }
    }
    Ok(())
}

impl IndexedMorphism {
    /// `map` must run between the underlying graphs of `source` and `target`.
    pub fn new(
        source: WeightedGraph,
        target: WeightedGraph,
        map: GraphMorphism,
        indices: BTreeMap<EdgeId, u64>,
    ) -> Result<Self> {
        if map.source() != source.graph() || map.target() != target.graph() {
            return Err(Error::IncompatibleEdgeImage {
                edge: EdgeId::new("*"),
                reason: "map does not run between the given weighted graphs".into(),
            });
        }
        check_edge_numbers(&map, &indices)?;
        Ok(IndexedMorphism { source, target, map, indices })
    }

    /// Indices 1 on horizontal and 0 on vertical edges.
    pub fn simple(source: WeightedGraph, target: WeightedGraph, map: GraphMorphism) -> Result<Self> {
        let indices = map
            .source()
            .edge_ids()
            .map(|e| (e.clone(), u64::from(!map.is_vertical(e))))
            .collect();
        Self::new(source, target, map, indices)
    }

    pub fn identity(g: &WeightedGraph) -> Self {
        Self::simple(g.clone(), g.clone(), GraphMorphism::identity(g.graph()))
            .expect("identity is indexed")
    }

    pub fn source(&self) -> &WeightedGraph {
        &self.source
    }

    pub fn target(&self) -> &WeightedGraph {
        &self.target
    }

    pub fn indices(&self) -> &BTreeMap<EdgeId, u64> {
        &self.indices
    }

    pub fn index(&self, e: &EdgeId) -> Result<u64> {
        self.indices.get(e).copied().ok_or_else(|| Error::UnknownEdge(e.clone()))
    }

    /// Pseudo-harmonicity: `M(v) = sum_{phi(e) = e'} r(e)` independent of `e'`.
    pub fn certify(&self) -> Result<Certificate> {
        self.certificate()
    }

    /// `R(v)` per vertex; nonnegative everywhere exactly when harmonic.
    pub fn slack(&self) -> Result<BTreeMap<VertexId, i64>> {
        let cert = self.certificate()?;
        Ok(self.local_ramification(&cert))
    }

    pub fn is_harmonic(&self) -> bool {
        self.slack().is_ok_and(|s| s.values().all(|&x| x >= 0))
    }

    pub fn degree(&self) -> Result<u64> {
        Ok(self.certificate()?.degree)
    }
}

impl Morphism for IndexedMorphism {
    fn category(&self) -> Category {
        Category::Weighted
    }

    fn map(&self) -> &GraphMorphism {
        &self.map
    }

    fn edge_multiplicity(&self, e: &EdgeId) -> u64 {
        self.indices[e]
    }

    fn source_weight(&self, v: &VertexId) -> u64 {
        self.source.weight(v)
    }

    fn target_weight(&self, v: &VertexId) -> u64 {
        self.target.weight(v)
    }

    fn source_canonical(&self) -> Divisor<VertexId> {
        self.source.canonical_divisor()
    }

    fn target_canonical(&self) -> Divisor<VertexId> {
        self.target.canonical_divisor()
    }
}

/// A morphism of loopless metric models; every horizontal edge `e` is
/// stretched by the integer slope `U(e) = l'(phi(e)) / l(e)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricMorphism<S> {
    source: MetricModel<S>,
    target: MetricModel<S>,
    map: GraphMorphism,
    slopes: BTreeMap<EdgeId, u64>,
}

impl<S: Scalar> MetricMorphism<S> {
    pub fn new(source: MetricModel<S>, target: MetricModel<S>, map: GraphMorphism) -> Result<Self> {
        reject_loops(source.graph())?;
        reject_loops(target.graph())?;
        if map.source() != source.graph() || map.target() != target.graph() {
            return Err(Error::IncompatibleEdgeImage {
                edge: EdgeId::new("*"),
                reason: "map does not run between the given models".into(),
            });
        }
        let mut slopes = BTreeMap::new();
        for (e, img) in map.edge_map() {
            let u = match img {
                EdgeImage::Vertex(_) => 0,
                EdgeImage::Edge(f) => {
                    let ratio = target.length(f)?.clone() / source.length(e)?.clone();
                    match ratio.to_int() {
                        Some(u) if u >= 1 => u as u64,
                        _ => {
                            return Err(Error::NonIntegralSlope {
                                edge: e.clone(),
                                ratio: format_scalar(&ratio),
                            })
                        }
                    }
                }
            };
            slopes.insert(e.clone(), u);
        }
        Ok(MetricMorphism { source, target, map, slopes })
    }

    pub fn identity(m: &MetricModel<S>) -> Result<Self> {
        Self::new(m.clone(), m.clone(), GraphMorphism::identity(m.graph()))
    }

    pub fn source(&self) -> &MetricModel<S> {
        &self.source
    }

    pub fn target(&self) -> &MetricModel<S> {
        &self.target
    }

    pub fn slopes(&self) -> &BTreeMap<EdgeId, u64> {
        &self.slopes
    }

    pub fn slope(&self, e: &EdgeId) -> Result<u64> {
        self.slopes.get(e).copied().ok_or_else(|| Error::UnknownEdge(e.clone()))
    }

    pub fn certify(&self) -> Result<Certificate> {
        self.certificate()
    }

    pub fn is_harmonic(&self) -> bool {
        self.certify().is_ok()
    }

    pub fn degree(&self) -> Result<u64> {
        Ok(self.certify()?.degree)
    }

    /// Refines the target edge `f` at distance `at` from its smaller endpoint,
    /// and every edge over `f` at the corresponding point, so that the new
    /// target vertex has its whole preimage among source vertices.
    pub fn refine_along_target(&self, f: &EdgeId, at: &S) -> Result<Self> {
        let f_ends = self.target.graph().endpoints(f)?.clone();
        let f_len = self.target.length(f)?.clone();
        let (target, t_mid, t_halves) = self.target.refine_at(f, at)?;
        let mut source = self.source.clone();
        let mut vertex_map = self.map.vertex_map().clone();
        let mut edge_map = self.map.edge_map().clone();
        for (e, img) in self.map.edge_map() {
            if img != &EdgeImage::Edge(f.clone()) {
                continue;
            }
            let ends = self.source.graph().endpoints(e)?.clone();
            let u = S::from_int(self.slopes[e] as i64);
            let forward = self.map.vertex_map()[ends.low()] == *f_ends.low();
            let offset = if forward { at.clone() / u } else { (f_len.clone() - at.clone()) / u };
            let (refined, s_mid, s_halves) = source.refine_at(e, &offset)?;
            source = refined;
            vertex_map.insert(s_mid, t_mid.clone());
            edge_map.remove(e);
            let (near_low, near_high) =
                if forward { (&t_halves[0], &t_halves[1]) } else { (&t_halves[1], &t_halves[0]) };
            edge_map.insert(s_halves[0].clone(), EdgeImage::Edge(near_low.clone()));
            edge_map.insert(s_halves[1].clone(), EdgeImage::Edge(near_high.clone()));
        }
        let map = GraphMorphism::new(source.graph().clone(), target.graph().clone(), vertex_map, edge_map)?;
        Self::new(source, target, map)
    }
}

impl<S: Scalar> Morphism for MetricMorphism<S> {
    fn category(&self) -> Category {
        Category::Metric
    }

    fn map(&self) -> &GraphMorphism {
        &self.map
    }

    fn edge_multiplicity(&self, e: &EdgeId) -> u64 {
        self.slopes[e]
    }

    fn source_canonical(&self) -> Divisor<VertexId> {
        self.source.canonical_divisor()
    }

    fn target_canonical(&self) -> Divisor<VertexId> {
        self.target.canonical_divisor()
    }
}

/// A metric morphism between weighted metric graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedMetricMorphism<S> {
    source: WeightedMetricGraph<S>,
    target: WeightedMetricGraph<S>,
    metric: MetricMorphism<S>,
}

impl<S: Scalar> WeightedMetricMorphism<S> {
    pub fn new(
        source: WeightedMetricGraph<S>,
        target: WeightedMetricGraph<S>,
        map: GraphMorphism,
    ) -> Result<Self> {
        let metric = MetricMorphism::new(source.model().clone(), target.model().clone(), map)?;
        Ok(WeightedMetricMorphism { source, target, metric })
    }

    pub fn identity(g: &WeightedMetricGraph<S>) -> Result<Self> {
        Self::new(g.clone(), g.clone(), GraphMorphism::identity(g.graph()))
    }

    pub fn source(&self) -> &WeightedMetricGraph<S> {
        &self.source
    }

    pub fn target(&self) -> &WeightedMetricGraph<S> {
        &self.target
    }

    pub fn metric(&self) -> &MetricMorphism<S> {
        &self.metric
    }

    pub fn slope(&self, e: &EdgeId) -> Result<u64> {
        self.metric.slope(e)
    }

    pub fn certify(&self) -> Result<Certificate> {
        self.certificate()
    }

    pub fn slack(&self) -> Result<BTreeMap<VertexId, i64>> {
        let cert = self.certificate()?;
        Ok(self.local_ramification(&cert))
    }

    pub fn is_harmonic(&self) -> bool {
        self.slack().is_ok_and(|s| s.values().all(|&x| x >= 0))
    }

    pub fn degree(&self) -> Result<u64> {
        Ok(self.certificate()?.degree)
    }
}

impl<S: Scalar> Morphism for WeightedMetricMorphism<S> {
    fn category(&self) -> Category {
        Category::WeightedMetric
    }

    fn map(&self) -> &GraphMorphism {
        self.metric.map()
    }

    fn edge_multiplicity(&self, e: &EdgeId) -> u64 {
        self.metric.slopes[e]
    }

    fn source_weight(&self, v: &VertexId) -> u64 {
        self.source.weight(v)
    }

    fn target_weight(&self, v: &VertexId) -> u64 {
        self.target.weight(v)
    }

    fn source_canonical(&self) -> Divisor<VertexId> {
        self.source.canonical_divisor()
    }

    fn target_canonical(&self) -> Divisor<VertexId> {
        self.target.canonical_divisor()
    }
}

#[cfg(test)]
pub(crate) mod samples {
    use super::*;
    use crate::graph::samples::*;

    /// Bowtie with the triangle `p a b` collapsed onto `p`.
    pub fn bowtie_collapse() -> GraphMorphism {
        let target = Multigraph::build(
            &["c", "d", "p"],
            &[("pc", "p", "c"), ("cd", "c", "d"), ("dp", "d", "p")],
        )
        .unwrap();
        GraphMorphism::build(
            bowtie(),
            target,
            &[("a", "p"), ("b", "p"), ("c", "c"), ("d", "d"), ("p", "p")],
            &[("pa", "@p"), ("ab", "@p"), ("bp", "@p"), ("pc", "pc"), ("cd", "cd"), ("dp", "dp")],
        )
        .unwrap()
    }

    /// The connected double cover of a triangle by a hexagon.
    pub fn hexagon_cover() -> GraphMorphism {
        let hexagon = Multigraph::build(
            &["a0", "a1", "b0", "b1", "c0", "c1"],
            &[
                ("ab0", "a0", "b0"),
                ("ab1", "a1", "b1"),
                ("bc0", "b0", "c0"),
                ("bc1", "b1", "c1"),
                ("ca0", "c0", "a1"),
                ("ca1", "c1", "a0"),
            ],
        )
        .unwrap();
        GraphMorphism::build(
            hexagon,
            triangle(),
            &[("a0", "a"), ("a1", "a"), ("b0", "b"), ("b1", "b"), ("c0", "c"), ("c1", "c")],
            &[
                ("ab0", "ab"),
                ("ab1", "ab"),
                ("bc0", "bc"),
                ("bc1", "bc"),
                ("ca0", "ca"),
                ("ca1", "ca"),
            ],
        )
        .unwrap()
    }

    pub fn unit_segment(len: i64, a: &str, b: &str) -> MetricModel<num_rational::Rational64> {
        let g = Multigraph::build(&[a, b], &[("e", a, b)]).unwrap();
        MetricModel::new(g, BTreeMap::from([("e".into(), num_rational::Rational64::from_integer(len))]))
            .unwrap()
    }

    /// Segment of length 2 stretched onto a segment of length 6.
    pub fn segment_stretch() -> MetricMorphism<num_rational::Rational64> {
        let source = unit_segment(2, "a", "b");
        let target = unit_segment(6, "a'", "b'");
        let map = GraphMorphism::build(
            source.graph().clone(),
            target.graph().clone(),
            &[("a", "a'"), ("b", "b'")],
            &[("e", "e")],
        )
        .unwrap();
        MetricMorphism::new(source, target, map).unwrap()
    }
}
