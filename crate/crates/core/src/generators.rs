//! Seeded constructors of harmonic morphisms in every category.
//!
//! Instances are assembled from constructions that are harmonic by design
//! (identities, collapsings, permutation covers, stretches and branched fiber
//! constructions) rather than by filtering random maps.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complex::{AbstractCurve, ComplexMorphism, CurveCover, MetrizedComplex};
use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Multigraph, PointId, VertexId};
use crate::metric::{MetricModel, WeightedMetricGraph};
use crate::morphism::{Category, EdgeImage, GraphMorphism, IndexedMorphism, MetricMorphism, Morphism, WeightedMetricMorphism};
use crate::scalar::Scalar;
use crate::theorems::{check_rh, check_rh_complex, RhReport};
use crate::weighted::WeightedGraph;

/// Attempts allowed before a generator gives up.
pub const BUDGET: usize = 1000;

/// Size bounds and seed for [`random_instance`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub category: Category,
    /// Vertices of the (loopless working) target.
    pub max_vertices: usize,
    /// Edges beyond a spanning tree of the target.
    pub max_extra_edges: usize,
    pub max_degree: u64,
    pub max_weight: u64,
    pub max_genus: u64,
    /// Target edge lengths are drawn from `1..=max_length`.
    pub max_length: u64,
    /// Ask for harmonic rather than merely pseudo-harmonic weighted instances.
    pub harmonic: bool,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(category: Category, seed: u64) -> Self {
        GenSpec {
            category,
            max_vertices: 6,
            max_extra_edges: 4,
            max_degree: 3,
            max_weight: 2,
            max_genus: 3,
            max_length: 4,
            harmonic: true,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GenSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSpec(format!("{what} must be positive")));
        if self.max_vertices == 0 {
            return bad("max_vertices");
        }
        if self.max_degree == 0 {
            return bad("max_degree");
        }
        if self.max_length == 0 {
            return bad("max_length");
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// A generated morphism in one of the five categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance<S> {
    Finite(GraphMorphism),
    Weighted(IndexedMorphism),
    Metric(MetricMorphism<S>),
    WeightedMetric(WeightedMetricMorphism<S>),
    Complex(ComplexMorphism<S>),
}

impl<S: Scalar> Instance<S> {
    pub fn morphism(&self) -> &dyn Morphism {
        match self {
            Instance::Finite(m) => m,
            Instance::Weighted(m) => m,
            Instance::Metric(m) => m,
            Instance::WeightedMetric(m) => m,
            Instance::Complex(m) => m,
        }
    }

    pub fn category(&self) -> Category {
        self.morphism().category()
    }

    /// Runs the category's validator; `harmonic` also demands `R >= 0` in the
    /// weighted categories, where pseudo-harmonic is the default notion.
    pub fn validate(&self, harmonic: bool) -> Result<()> {
        match self {
            Instance::Complex(m) => m.validate().map(|_| ()).map_err(|v| Error::NotHarmonic(v.to_string())),
            Instance::Weighted(m) if harmonic => require_slack(m.slack()?),
            Instance::WeightedMetric(m) if harmonic => require_slack(m.slack()?),
            other => other.morphism().certificate().map(|_| ()),
        }
    }

    pub fn check_rh(&self) -> Result<RhReport> {
        match self {
            Instance::Complex(m) => check_rh_complex(m),
            other => check_rh(other.morphism()),
        }
    }
}

fn require_slack(slack: BTreeMap<VertexId, i64>) -> Result<()> {
    match slack.iter().find(|(_, &s)| s < 0) {
        Some((v, s)) => Err(Error::NotHarmonic(format!("local ramification {s} at {v}"))),
        None => Ok(()),
    }
}

fn vid(s: String) -> VertexId {
    VertexId::new(s)
}

fn eid(s: String) -> EdgeId {
    EdgeId::new(s)
}

/// A random connected multigraph on `v0, v1, ...`: a random spanning tree plus
/// `extra` further edges, loops included only when `loops` is set.
pub fn random_multigraph(rng: &mut impl Rng, vertices: usize, extra: usize, loops: bool) -> Multigraph {
    let names: Vec<VertexId> = (0..vertices.max(1)).map(|i| vid(format!("v{i}"))).collect();
    let mut edges = Vec::new();
    for i in 1..names.len() {
        let j = rng.gen_range(0..i);
        edges.push((names[j].clone(), names[i].clone()));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..names.len());
        let mut b = rng.gen_range(0..names.len());
        if a == b && !loops {
            if names.len() == 1 {
                continue;
            }
            b = (a + 1 + rng.gen_range(0..names.len() - 1)) % names.len();
        }
        edges.push((names[a].clone(), names[b].clone()));
    }
    let edges = edges.into_iter().enumerate().map(|(k, (a, b))| (eid(format!("e{k}")), a, b));
    Multigraph::new(names.iter().cloned(), edges).expect("spanning tree keeps it connected")
}

/// A random graph within the spec's bounds; loops count against the vertex
/// bound because they are subdivided for harmonicity checks.
pub fn random_graph(rng: &mut impl Rng, spec: &GenSpec, loops: bool) -> Multigraph {
    let n = rng.gen_range(spec.max_vertices.min(2)..=spec.max_vertices);
    let extra = rng.gen_range(0..=spec.max_extra_edges);
    if !loops {
        return random_multigraph(rng, n, extra, false);
    }
    let mut g = random_multigraph(rng, n, extra, true);
    // Drop loops beyond the vertex budget.
    let room = spec.max_vertices - n;
    let excess: Vec<EdgeId> = g.loops().map(|(e, _)| e.clone()).skip(room).collect();
    if !excess.is_empty() {
        let edges = g
            .edges()
            .filter(|(e, _)| !excess.contains(e))
            .map(|(e, ends)| (e.clone(), ends.low().clone(), ends.high().clone()))
            .collect::<Vec<_>>();
        g = Multigraph::new(g.vertices().cloned(), edges).expect("removing loops keeps it connected");
    }
    g
}

fn random_weights(rng: &mut impl Rng, g: &Multigraph, max: u64) -> BTreeMap<VertexId, u64> {
    g.vertices().map(|v| (v.clone(), rng.gen_range(0..=max))).collect()
}

fn random_lengths<S: Scalar>(rng: &mut impl Rng, g: &Multigraph, max: u64) -> BTreeMap<EdgeId, S> {
    g.edge_ids().map(|e| (e.clone(), S::from_int(rng.gen_range(1..=max) as i64))).collect()
}

pub fn random_weighted_graph(rng: &mut impl Rng, spec: &GenSpec) -> WeightedGraph {
    let g = random_graph(rng, spec, false);
    let w = random_weights(rng, &g, spec.max_weight);
    WeightedGraph::new(g, w).expect("loopless with valid weights")
}

pub fn random_metric_model<S: Scalar>(rng: &mut impl Rng, spec: &GenSpec, loops: bool) -> MetricModel<S> {
    let g = random_graph(rng, spec, loops);
    let lengths = random_lengths(rng, &g, spec.max_length);
    MetricModel::new(g, lengths).expect("positive lengths")
}

pub fn random_weighted_metric_graph<S: Scalar>(rng: &mut impl Rng, spec: &GenSpec) -> WeightedMetricGraph<S> {
    let model = random_metric_model(rng, spec, false);
    let w = random_weights(rng, model.graph(), spec.max_weight);
    WeightedMetricGraph::new(model, w).expect("loopless with valid weights")
}

/// A random complex; curves of genus 0 or 1 sometimes carry an explicit
/// canonical divisor.
pub fn random_complex<S: Scalar>(rng: &mut impl Rng, spec: &GenSpec) -> MetrizedComplex<S> {
    let skeleton = random_weighted_metric_graph(rng, spec);
    let genera = skeleton.graph().vertices().map(|v| (v.clone(), rng.gen_range(0..=spec.max_genus))).collect();
    let c = MetrizedComplex::with_genera(skeleton, &genera).expect("one point per edge");
    with_random_canonical_reps(rng, c)
}

fn with_random_canonical_reps<S: Scalar>(rng: &mut impl Rng, c: MetrizedComplex<S>) -> MetrizedComplex<S> {
    let curves = c
        .curves()
        .iter()
        .map(|(v, curve)| {
            let k = match (curve.genus, curve.points.iter().next()) {
                (1, _) if rng.gen_bool(0.5) => Some(Divisor::zero()),
                (0, Some(p)) if rng.gen_bool(0.5) => Some(Divisor::point(p.clone(), -2)),
                _ => None,
            };
            let curve = match k {
                Some(k) => curve.clone().with_canonical(k),
                None => curve.clone(),
            };
            (v.clone(), curve)
        })
        .collect();
    MetrizedComplex::new(c.skeleton().clone(), curves, c.reductions().clone()).expect("degrees match")
}

/// A random divisor on the given vertices with coefficients in `-bound..=bound`.
pub fn random_divisor<'a>(
    rng: &mut impl Rng,
    vertices: impl IntoIterator<Item = &'a VertexId>,
    bound: i64,
) -> Divisor<VertexId> {
    vertices.into_iter().map(|v| (v.clone(), rng.gen_range(-bound..=bound))).collect()
}

/// Contracts the side of `g` at a cut vertex onto the cut vertex and is the
/// identity elsewhere. `side` must be a union of components of `g - cut`.
pub fn collapsing_morphism(g: &Multigraph, cut: &VertexId, side: &BTreeSet<VertexId>) -> Result<GraphMorphism> {
    if !g.is_cut_vertex(cut) || side.is_empty() || side.contains(cut) {
        return Err(Error::NotACutVertex(cut.clone()));
    }
    let components = g.components_avoiding(Some(cut));
    let mut covered = BTreeSet::new();
    for c in &components {
        if c.iter().any(|v| side.contains(v)) {
            if !c.is_subset(side) {
                return Err(Error::NotACutVertex(cut.clone()));
            }
            covered.extend(c.iter().cloned());
        }
    }
    if covered != *side {
        return Err(Error::NotACutVertex(cut.clone()));
    }
    let keep: BTreeSet<VertexId> = g.vertices().filter(|v| !side.contains(*v)).cloned().collect();
    if keep.len() <= 1 {
        return Err(Error::TargetTooSmall);
    }
    let target = g.induced(&keep)?;
    let vertex_map = g
        .vertices()
        .map(|v| (v.clone(), if side.contains(v) { cut.clone() } else { v.clone() }))
        .collect();
    let edge_map = g
        .edges()
        .map(|(e, ends)| {
            let collapsed = side.contains(ends.low()) || side.contains(ends.high());
            let img = if collapsed { EdgeImage::Vertex(cut.clone()) } else { EdgeImage::Edge(e.clone()) };
            (e.clone(), img)
        })
        .collect();
    GraphMorphism::new(g.clone(), target, vertex_map, edge_map)
}

fn sheet(v: &VertexId, i: u64) -> VertexId {
    vid(format!("{v}~{i}"))
}

fn lift(e: &EdgeId, i: u64) -> EdgeId {
    eid(format!("{e}~{i}"))
}

/// The `d`-sheeted cover of `base` whose edge `e` joins sheet `i` over its
/// smaller endpoint to sheet `assignment[e][i-1]` over the other.
///
/// Edges without an assignment use the identity; loops only accept it. When
/// the cover is disconnected the component through sheet 1 of the least base
/// vertex is returned.
pub fn permutation_cover(
    base: &Multigraph,
    d: u64,
    assignment: &BTreeMap<EdgeId, Vec<u64>>,
) -> Result<GraphMorphism> {
    if d == 0 {
        return Err(Error::InvalidSpec("cover degree must be positive".into()));
    }
    for (e, perm) in assignment {
        let ends = base.endpoints(e)?;
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        if sorted != (1..=d).collect::<Vec<_>>() {
            return Err(Error::InvalidSpec(format!("assignment of {e} is not a permutation of 1..={d}")));
        }
        if ends.is_loop() && perm.iter().enumerate().any(|(i, &j)| j != i as u64 + 1) {
            return Err(Error::LoopImageOfNonLoop(lift(e, 1)));
        }
    }
    let mut edges = Vec::new();
    let mut edge_map = BTreeMap::new();
    for (e, ends) in base.edges() {
        for i in 1..=d {
            let j = assignment.get(e).map_or(i, |p| p[i as usize - 1]);
            edges.push((lift(e, i), sheet(ends.low(), i), sheet(ends.high(), j)));
            edge_map.insert(lift(e, i), EdgeImage::Edge(e.clone()));
        }
    }
    let mut adjacency: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for (_, a, b) in &edges {
        adjacency.entry(a.clone()).or_default().push(b.clone());
        adjacency.entry(b.clone()).or_default().push(a.clone());
    }
    let start = sheet(base.vertices().next().expect("nonempty"), 1);
    let mut seen = BTreeSet::from([start.clone()]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for w in adjacency.get(&v).into_iter().flatten() {
            if seen.insert(w.clone()) {
                stack.push(w.clone());
            }
        }
    }
    let vertex_map: BTreeMap<VertexId, VertexId> = base
        .vertices()
        .flat_map(|v| (1..=d).map(move |i| (sheet(v, i), v.clone())))
        .filter(|(s, _)| seen.contains(s))
        .collect();
    let edges: Vec<_> = edges.into_iter().filter(|(_, a, _)| seen.contains(a)).collect();
    edge_map.retain(|e, _| edges.iter().any(|(f, _, _)| f == e));
    let source = Multigraph::new(seen, edges)?;
    GraphMorphism::new(source, base.clone(), vertex_map, edge_map)
}

/// `base` with every length divided by `k`, mapped onto `base`: all slopes are `k`.
pub fn metric_stretch<S: Scalar>(base: &MetricModel<S>, k: u64) -> Result<MetricMorphism<S>> {
    if k == 0 {
        return Err(Error::InvalidSpec("stretch factor must be positive".into()));
    }
    let k_s = S::from_int(k as i64);
    let lengths = base.lengths().iter().map(|(e, l)| (e.clone(), l.clone() / k_s.clone())).collect();
    let source = MetricModel::new(base.graph().clone(), lengths)?;
    MetricMorphism::new(source, base.clone(), GraphMorphism::identity(base.graph()))
}

/// A harmonic morphism of multigraphs with per-edge multiplicities.
struct Branched {
    map: GraphMorphism,
    mu: BTreeMap<EdgeId, u64>,
}

/// Random composition of `n` into `parts` positive parts.
fn composition(rng: &mut impl Rng, n: u64, parts: u64) -> Vec<u64> {
    let mut out = vec![1; parts as usize];
    for _ in 0..n - parts {
        let i = rng.gen_range(0..out.len());
        out[i] += 1;
    }
    out
}

/// Builds a source over `target` fiber by fiber.
///
/// Each target vertex gets fiber vertices with multiplicities summing to `d`;
/// each target edge gets a nonnegative integer matrix with those row and
/// column sums, each entry split into parallel edges whose multiplicities
/// add up to it. Vertical edges and collapsed pendant vertices are sprinkled
/// in. `None` when the result is disconnected.
fn branched(rng: &mut impl Rng, target: &Multigraph, d: u64, unit: bool) -> Option<Branched> {
    let mut fibers: BTreeMap<VertexId, Vec<(VertexId, u64)>> = BTreeMap::new();
    for b in target.vertices() {
        let parts = if target.edge_count() == 0 { 1 } else { rng.gen_range(1..=d) };
        let ms = if target.edge_count() == 0 { vec![0] } else { composition(rng, d, parts) };
        let fiber = ms.into_iter().enumerate().map(|(i, m)| (sheet(b, i as u64 + 1), m)).collect();
        fibers.insert(b.clone(), fiber);
    }
    let mut vertices: BTreeSet<VertexId> = fibers.values().flatten().map(|(v, _)| v.clone()).collect();
    let mut edges: Vec<(EdgeId, VertexId, VertexId)> = Vec::new();
    let mut edge_map = BTreeMap::new();
    let mut mu = BTreeMap::new();
    let mut push = |e: EdgeId, a: VertexId, b: VertexId, img: EdgeImage, m: u64| {
        edges.push((e.clone(), a, b));
        edge_map.insert(e.clone(), img);
        mu.insert(e, m);
    };
    for (f, ends) in target.edges() {
        let mut k = 0;
        let mut next = || {
            k += 1;
            lift(f, k)
        };
        if ends.is_loop() {
            for (v, m) in &fibers[ends.low()] {
                for _ in 0..*m {
                    push(next(), v.clone(), v.clone(), EdgeImage::Edge(f.clone()), 1);
                }
            }
            continue;
        }
        let rows = &fibers[ends.low()];
        let cols = &fibers[ends.high()];
        let mut r: Vec<u64> = rows.iter().map(|(_, m)| *m).collect();
        let mut c: Vec<u64> = cols.iter().map(|(_, m)| *m).collect();
        while r.iter().any(|&x| x > 0) {
            let is: Vec<usize> = (0..r.len()).filter(|&i| r[i] > 0).collect();
            let js: Vec<usize> = (0..c.len()).filter(|&j| c[j] > 0).collect();
            let (i, j) = (*is.choose(rng).unwrap(), *js.choose(rng).unwrap());
            let x = rng.gen_range(1..=r[i].min(c[j]));
            r[i] -= x;
            c[j] -= x;
            let parts = if unit {
                vec![1; x as usize]
            } else {
                let k = rng.gen_range(1..=x);
                composition(rng, x, k)
            };
            for m in parts {
                push(next(), rows[i].0.clone(), cols[j].0.clone(), EdgeImage::Edge(f.clone()), m);
            }
        }
    }
    let mut k = 0;
    for (b, fiber) in &fibers {
        let mut members: Vec<VertexId> = fiber.iter().map(|(v, _)| v.clone()).collect();
        for p in 0..rng.gen_range(0..=2u64) {
            let anchor = members.choose(rng).unwrap().clone();
            let pendant = vid(format!("{b}~z{p}"));
            vertices.insert(pendant.clone());
            members.push(pendant.clone());
            k += 1;
            push(eid(format!("vert~{k}")), anchor, pendant, EdgeImage::Vertex(b.clone()), 0);
        }
        for _ in 0..rng.gen_range(0..=1u64) {
            let a = members.choose(rng).unwrap().clone();
            let c = members.choose(rng).unwrap().clone();
            if a == c && !unit {
                continue;
            }
            k += 1;
            push(eid(format!("vert~{k}")), a, c, EdgeImage::Vertex(b.clone()), 0);
        }
    }
    let vertex_map = fibers
        .iter()
        .flat_map(|(b, fiber)| fiber.iter().map(move |(v, _)| (v.clone(), b.clone())))
        .chain(vertices.iter().filter(|v| v.as_str().contains("~z")).map(|v| {
            let b = v.as_str().rsplit_once("~z").expect("pendant name").0;
            (v.clone(), vid(b.to_string()))
        }))
        .collect();
    let source = Multigraph::new(vertices, edges).ok()?;
    let map = GraphMorphism::new(source, target.clone(), vertex_map, edge_map).ok()?;
    Some(Branched { map, mu })
}

/// Smallest weights making every local ramification nonnegative.
fn harmonic_weights(map: &GraphMorphism, mu: &BTreeMap<EdgeId, u64>, m: &BTreeMap<VertexId, u64>, tw: &BTreeMap<VertexId, u64>) -> BTreeMap<VertexId, u64> {
    map.source()
        .vertices()
        .map(|v| {
            let mv = m[v] as i64;
            let excess: i64 = map.source().incident_edges(v).map(|e| mu[e] as i64 - 1).sum();
            let need = mv * tw[&map.vertex_map()[v]] as i64 - (mv - 1) + (excess + 1).div_euclid(2);
            (v.clone(), need.max(0) as u64)
        })
        .collect()
}

fn target_graph(rng: &mut impl Rng, spec: &GenSpec, loops: bool) -> Multigraph {
    random_graph(rng, spec, loops)
}

fn source_weights(
    rng: &mut impl Rng,
    spec: &GenSpec,
    harmonic: bool,
    map: &GraphMorphism,
    mu: &BTreeMap<EdgeId, u64>,
    tw: &BTreeMap<VertexId, u64>,
) -> Result<BTreeMap<VertexId, u64>> {
    if !harmonic {
        return Ok(random_weights(rng, map.source(), spec.max_weight));
    }
    let cert = crate::morphism::certify_with(map, &|e| mu[e])?;
    let floor = harmonic_weights(map, mu, &cert.multiplicity, tw);
    Ok(floor.into_iter().map(|(v, w)| (v, w + rng.gen_range(0..=1))).collect())
}

fn scaled_lengths<S: Scalar>(
    rng: &mut impl Rng,
    spec: &GenSpec,
    map: &GraphMorphism,
    mu: &BTreeMap<EdgeId, u64>,
    target: &MetricModel<S>,
) -> BTreeMap<EdgeId, S> {
    map.edge_map()
        .iter()
        .map(|(e, img)| {
            let l = match img {
                EdgeImage::Edge(f) => target.lengths()[f].clone() / S::from_int(mu[e] as i64),
                EdgeImage::Vertex(_) => {
                    S::from_int(rng.gen_range(1..=spec.max_length) as i64) / S::from_int(rng.gen_range(1..=2))
                }
            };
            (e.clone(), l)
        })
        .collect()
}

/// Cover of a random base with a collapsed gadget hung off one vertex.
fn cover_with_collapse(rng: &mut impl Rng, spec: &GenSpec, loops: bool) -> Result<GraphMorphism> {
    let base = target_graph(rng, spec, loops);
    let d = rng.gen_range(1..=spec.max_degree);
    let mut assignment = BTreeMap::new();
    for (e, ends) in base.edges() {
        let mut perm: Vec<u64> = (1..=d).collect();
        if !ends.is_loop() {
            perm.shuffle(rng);
        }
        assignment.insert(e.clone(), perm);
    }
    let cover = permutation_cover(&base, d, &assignment)?;
    let c = cover.source();
    if c.vertex_count() < 2 || rng.gen_bool(0.3) {
        return Ok(cover);
    }
    let p = c.vertices().collect::<Vec<_>>().choose(rng).map(|v| (*v).clone()).expect("nonempty");
    let size = rng.gen_range(1..=3);
    let gadget: Vec<VertexId> = (0..size).map(|i| vid(format!("z{i}"))).collect();
    let mut edges: Vec<(EdgeId, VertexId, VertexId)> =
        c.edges().map(|(e, ends)| (e.clone(), ends.low().clone(), ends.high().clone())).collect();
    for (i, z) in gadget.iter().enumerate() {
        let anchor = if i == 0 { p.clone() } else { gadget[rng.gen_range(0..i)].clone() };
        edges.push((eid(format!("g{i}")), anchor, z.clone()));
    }
    if rng.gen_bool(0.5) {
        let z = gadget.choose(rng).unwrap().clone();
        let other = if rng.gen_bool(0.5) { p.clone() } else { gadget.choose(rng).unwrap().clone() };
        if loops || other != z {
            edges.push((eid("g_extra".into()), z, other));
        }
    }
    let g = Multigraph::new(c.vertices().cloned().chain(gadget.iter().cloned()), edges)?;
    let collapse = collapsing_morphism(&g, &p, &gadget.into_iter().collect())?;
    collapse.then(&cover)
}

fn simple_mu(map: &GraphMorphism) -> BTreeMap<EdgeId, u64> {
    map.edge_map().iter().map(|(e, img)| (e.clone(), u64::from(matches!(img, EdgeImage::Edge(_))))).collect()
}

fn finite_instance(rng: &mut impl Rng, spec: &GenSpec) -> Result<Option<GraphMorphism>> {
    Ok(match rng.gen_range(0..10) {
        0 => Some(GraphMorphism::identity(&random_graph(rng, spec, true))),
        1..=3 => Some(cover_with_collapse(rng, spec, true)?),
        _ => {
            let target = target_graph(rng, spec, true);
            let d = rng.gen_range(1..=spec.max_degree);
            branched(rng, &target, d, true).map(|b| b.map)
        }
    })
}

fn weighted_instance(rng: &mut impl Rng, spec: &GenSpec) -> Result<Option<IndexedMorphism>> {
    let (map, mu) = match rng.gen_range(0..10) {
        0 => {
            let g = random_weighted_graph(rng, spec);
            return Ok(Some(IndexedMorphism::identity(&g)));
        }
        1..=3 => {
            let map = cover_with_collapse(rng, spec, false)?;
            let mu = simple_mu(&map);
            (map, mu)
        }
        _ => {
            let target = target_graph(rng, spec, false);
            let d = rng.gen_range(1..=spec.max_degree);
            match branched(rng, &target, d, false) {
                Some(b) => (b.map, b.mu),
                None => return Ok(None),
            }
        }
    };
    let tw = random_weights(rng, map.target(), spec.max_weight);
    let sw = source_weights(rng, spec, spec.harmonic, &map, &mu, &tw)?;
    let source = WeightedGraph::new(map.source().clone(), sw)?;
    let target = WeightedGraph::new(map.target().clone(), tw)?;
    Ok(Some(IndexedMorphism::new(source, target, map, mu)?))
}

fn metric_parts<S: Scalar>(
    rng: &mut impl Rng,
    spec: &GenSpec,
) -> Result<Option<(MetricModel<S>, MetricModel<S>, GraphMorphism, BTreeMap<EdgeId, u64>)>> {
    let target_graph = target_graph(rng, spec, false);
    let target = MetricModel::new(target_graph.clone(), random_lengths(rng, &target_graph, spec.max_length))?;
    let (map, mu) = match rng.gen_range(0..10) {
        0..=2 => {
            let map = cover_with_collapse_on(rng, &target_graph, spec)?;
            let k = rng.gen_range(1..=spec.max_degree);
            let mu = simple_mu(&map).into_iter().map(|(e, m)| (e, m * k)).collect();
            (map, mu)
        }
        _ => {
            let d = rng.gen_range(1..=spec.max_degree);
            match branched(rng, &target_graph, d, false) {
                Some(b) => (b.map, b.mu),
                None => return Ok(None),
            }
        }
    };
    let source = MetricModel::new(map.source().clone(), scaled_lengths(rng, spec, &map, &mu, &target))?;
    Ok(Some((source, target, map, mu)))
}

/// Like [`cover_with_collapse`] but over a given base.
fn cover_with_collapse_on(rng: &mut impl Rng, base: &Multigraph, spec: &GenSpec) -> Result<GraphMorphism> {
    let d = rng.gen_range(1..=spec.max_degree);
    let assignment = base
        .edge_ids()
        .map(|e| {
            let mut perm: Vec<u64> = (1..=d).collect();
            perm.shuffle(rng);
            (e.clone(), perm)
        })
        .collect();
    permutation_cover(base, d, &assignment)
}

fn metric_instance<S: Scalar>(rng: &mut impl Rng, spec: &GenSpec) -> Result<Option<MetricMorphism<S>>> {
    match rng.gen_range(0..10) {
        0 => Ok(Some(MetricMorphism::identity(&random_metric_model(rng, spec, false))?)),
        1 => {
            let base = random_metric_model(rng, spec, false);
            Ok(Some(metric_stretch(&base, rng.gen_range(1..=spec.max_degree))?))
        }
        _ => Ok(match metric_parts(rng, spec)? {
            Some((source, target, map, _)) => Some(MetricMorphism::new(source, target, map)?),
            None => None,
        }),
    }
}

fn weighted_metric_instance<S: Scalar>(
    rng: &mut impl Rng,
    spec: &GenSpec,
    harmonic: bool,
) -> Result<Option<WeightedMetricMorphism<S>>> {
    if rng.gen_range(0..10) == 0 {
        return Ok(Some(WeightedMetricMorphism::identity(&random_weighted_metric_graph(rng, spec))?));
    }
    let Some((source, target, map, mu)) = metric_parts::<S>(rng, spec)? else {
        return Ok(None);
    };
    let tw = random_weights(rng, map.target(), spec.max_weight);
    let sw = source_weights(rng, spec, harmonic, &map, &mu, &tw)?;
    Ok(Some(WeightedMetricMorphism::new(
        WeightedMetricGraph::new(source, sw)?,
        WeightedMetricGraph::new(target, tw)?,
        map,
    )?))
}

/// Decorates a harmonic weighted metric morphism with curves and covers.
fn complex_instance<S: Scalar>(rng: &mut impl Rng, spec: &GenSpec) -> Result<Option<ComplexMorphism<S>>> {
    if rng.gen_range(0..10) == 0 {
        let c = random_complex(rng, spec);
        return Ok(Some(ComplexMorphism::identity(&c)?));
    }
    let Some(base) = weighted_metric_instance::<S>(rng, spec, true)? else {
        return Ok(None);
    };
    let cert = base.certify()?;
    let map = base.map();
    let tgt_genera: BTreeMap<VertexId, u64> =
        map.target().vertices().map(|v| (v.clone(), rng.gen_range(0..=spec.max_genus))).collect();
    let mut src_genera = BTreeMap::new();
    for v in map.source().vertices() {
        let m = cert.multiplicity(v) as i64;
        let genus = if m == 0 {
            rng.gen_range(0..=spec.max_genus)
        } else {
            let g_image = tgt_genera[&map.vertex_map()[v]] as i64;
            let marked: i64 = map
                .source()
                .incident_edges(v)
                .map(|e| base.slope(e).expect("slope") as i64)
                .filter(|&u| u > 0)
                .map(|u| u - 1)
                .sum();
            // Classical Riemann-Hurwitz needs 2g - 2 >= m(2g' - 2) + marked ramification.
            let least = ((m * (2 * g_image - 2) + marked + 1).div_euclid(2) + 1).max(0) as u64;
            if least > spec.max_genus {
                return Ok(None);
            }
            rng.gen_range(least..=spec.max_genus)
        };
        src_genera.insert(v.clone(), genus);
    }
    let source = MetrizedComplex::with_genera(base.source().clone(), &src_genera)?;
    let target = MetrizedComplex::with_genera(base.target().clone(), &tgt_genera)?;
    let source = with_random_canonical_reps(rng, source);
    let target = with_random_canonical_reps(rng, target);
    let mut covers = BTreeMap::new();
    for v in map.source().vertices() {
        let m = cert.multiplicity(v);
        if m == 0 {
            continue;
        }
        let mut cover = CurveCover::new(m);
        let image = &map.vertex_map()[v];
        for e in map.source().incident_edges(v) {
            if let EdgeImage::Edge(f) = &map.edge_map()[e] {
                cover = cover.with_point(
                    source.marked_point(v, e)?.clone(),
                    target.marked_point(image, f)?.clone(),
                    base.slope(e)?,
                );
            }
        }
        covers.insert(v.clone(), cover);
    }
    Ok(Some(ComplexMorphism::new(source, target, map.clone(), covers)?))
}

/// A seeded instance in the spec's category that passes the category's
/// validator. Identical specs give identical instances.
pub fn random_instance<S: Scalar>(spec: &GenSpec) -> Result<Instance<S>> {
    spec.validate()?;
    let mut rng = spec.rng();
    for _ in 0..BUDGET {
        let attempt = match spec.category {
            Category::Finite => finite_instance(&mut rng, spec)?.map(Instance::Finite),
            Category::Weighted => weighted_instance(&mut rng, spec)?.map(Instance::Weighted),
            Category::Metric => metric_instance(&mut rng, spec)?.map(Instance::Metric),
            Category::WeightedMetric => {
                weighted_metric_instance(&mut rng, spec, spec.harmonic)?.map(Instance::WeightedMetric)
            }
            Category::Complex => complex_instance(&mut rng, spec)?.map(Instance::Complex),
        };
        if let Some(instance) = attempt {
            instance.validate(spec.harmonic)?;
            return Ok(instance);
        }
    }
    Err(Error::BudgetExceeded(BUDGET))
}

/// Curve points at `v` in a generated complex are named after edges.
pub fn point_of(e: &EdgeId) -> PointId {
    PointId::new(e.as_str())
}

/// A curve with no tracked points.
pub fn bare_curve(genus: u64) -> AbstractCurve {
    AbstractCurve::new(genus, [])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::samples::*;
    use num_rational::Rational64;

    fn v(s: &str) -> VertexId {
        s.into()
    }

    #[test]
    fn collapsing_bowtie() {
        let side = [v("a"), v("b")].into_iter().collect();
        let m = collapsing_morphism(&bowtie(), &v("p"), &side).unwrap();
        assert_eq!(m.degree().unwrap(), 1);
        assert_eq!(crate::theorems::ramification_divisor(&m).unwrap(), Divisor::point(v("p"), 2));
    }

    #[test]
    fn collapsing_path() {
        let m = collapsing_morphism(&path(3), &v("v1"), &[v("v0")].into_iter().collect()).unwrap();
        assert!(m.is_harmonic());
        assert_eq!(m.degree().unwrap(), 1);
        let err = collapsing_morphism(&path(3), &v("v0"), &[v("v1")].into_iter().collect()).unwrap_err();
        assert_eq!(err, Error::NotACutVertex(v("v0")));
        let err = collapsing_morphism(&path(2), &v("v0"), &[v("v1")].into_iter().collect()).unwrap_err();
        assert_eq!(err, Error::NotACutVertex(v("v0")));
        let err = collapsing_morphism(&path(3), &v("v1"), &[v("v2")].into_iter().collect());
        assert!(err.is_ok());
    }

    #[test]
    fn collapse_to_single_vertex_is_refused() {
        let star = Multigraph::build(&["c", "x", "y"], &[("cx", "c", "x"), ("cy", "c", "y")]).unwrap();
        let err = collapsing_morphism(&star, &v("c"), &[v("x"), v("y")].into_iter().collect()).unwrap_err();
        assert_eq!(err, Error::TargetTooSmall);
    }

    #[test]
    fn hexagon_from_transpositions() {
        let swap: BTreeMap<EdgeId, Vec<u64>> = triangle().edge_ids().map(|e| (e.clone(), vec![2, 1])).collect();
        let m = permutation_cover(&triangle(), 2, &swap).unwrap();
        assert_eq!(m.source().vertex_count(), 6);
        assert_eq!(m.source().genus(), 1);
        let cert = m.certify().unwrap();
        assert_eq!(cert.degree, 2);
        assert!(cert.multiplicity.values().all(|&x| x == 1));
    }

    #[test]
    fn trivial_covers() {
        let one = permutation_cover(&triangle(), 1, &BTreeMap::new()).unwrap();
        assert_eq!(one.degree().unwrap(), 1);
        let split = permutation_cover(&triangle(), 2, &BTreeMap::new()).unwrap();
        assert_eq!(split.source().vertex_count(), 3);
        assert_eq!(split.degree().unwrap(), 1);
    }

    #[test]
    fn stretch() {
        let base = crate::morphism::samples::unit_segment(6, "a", "b");
        let m = metric_stretch(&base, 3).unwrap();
        assert_eq!(m.slope(&"e".into()).unwrap(), 3);
        assert_eq!(m.degree().unwrap(), 3);
        assert_eq!(metric_stretch(&base, 1).unwrap().degree().unwrap(), 1);
    }

    #[test]
    fn theta_stretch_rh() {
        let theta = Multigraph::build(&["u", "w"], &[("x", "u", "w"), ("y", "u", "w"), ("z", "u", "w")]).unwrap();
        let m = metric_stretch(&MetricModel::<Rational64>::unit(theta), 2).unwrap();
        assert_eq!(m.degree().unwrap(), 2);
        let rep = check_rh(&m).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.lhs, 2);
    }

    #[test]
    fn instances_are_deterministic_and_valid() {
        for category in Category::ALL {
            for seed in 0..40 {
                let spec = GenSpec::new(category, seed);
                let a = random_instance::<Rational64>(&spec).unwrap();
                let b = random_instance::<Rational64>(&spec).unwrap();
                assert_eq!(a, b);
                let rep = a.check_rh().unwrap();
                assert!(rep.holds, "{category} seed {seed}: {rep:?}");
            }
        }
    }

    #[test]
    fn bad_spec() {
        let mut spec = GenSpec::new(Category::Finite, 1);
        spec.max_degree = 0;
        assert!(matches!(random_instance::<Rational64>(&spec), Err(Error::InvalidSpec(_))));
    }
}
