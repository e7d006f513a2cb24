//! Metric graphs presented by models with exact edge lengths, and their
//! vertex-weighted and pseudo-metric variants.

use std::collections::{BTreeMap, BTreeSet};

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::graph::{fresh_id, Endpoints, EdgeId, Multigraph, VertexId};
use crate::scalar::{format_scalar, Scalar};
use crate::weighted::{attach_virtual_loops, check_weights, reject_loops};

/// A model `(G, l)` of a metric graph: a multigraph with positive edge lengths.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetricModel<S> {
    graph: Multigraph,
    lengths: BTreeMap<EdgeId, S>,
}

fn check_lengths<S: Scalar>(g: &Multigraph, lengths: &BTreeMap<EdgeId, S>) -> Result<()> {
    for e in lengths.keys() {
        if !g.has_edge(e) {
            return Err(Error::LengthOnUnknownEdge(e.clone()));
        }
    }
    for e in g.edge_ids() {
        if !lengths.contains_key(e) {
            return Err(Error::MissingLength(e.clone()));
        }
    }
    Ok(())
}

impl<S: Scalar> MetricModel<S> {
    pub fn new(graph: Multigraph, lengths: BTreeMap<EdgeId, S>) -> Result<Self> {
        check_lengths(&graph, &lengths)?;
        for (e, l) in &lengths {
            if !l.is_positive() {
                return Err(Error::NonPositiveLength { edge: e.clone(), length: format_scalar(l) });
            }
        }
        Ok(MetricModel { graph, lengths })
    }

    /// Every edge gets length one.
    pub fn unit(graph: Multigraph) -> Self {
        let lengths = graph.edge_ids().map(|e| (e.clone(), S::one())).collect();
        MetricModel { graph, lengths }
    }

    pub fn graph(&self) -> &Multigraph {
        &self.graph
    }

    pub fn lengths(&self) -> &BTreeMap<EdgeId, S> {
        &self.lengths
    }

    pub fn length(&self, e: &EdgeId) -> Result<&S> {
        self.lengths.get(e).ok_or_else(|| Error::UnknownEdge(e.clone()))
    }

    pub fn total_length(&self) -> S {
        self.lengths.values().fold(S::zero(), |acc, l| acc + l.clone())
    }

    /// Genus of the underlying graph; the same for every model.
    pub fn genus(&self) -> u64 {
        self.graph.genus()
    }

    /// `sum (val(v) - 2)(v)` over model vertices.
    pub fn canonical_divisor(&self) -> Divisor<VertexId> {
        crate::divisor::canonical_divisor(&self.graph)
    }

    /// Splits `e` at distance `at` from its lexicographically smaller endpoint.
    pub fn refine(&self, e: &EdgeId, at: &S) -> Result<Self> {
        Ok(self.refine_at(e, at)?.0)
    }

    /// Like [`refine`](Self::refine), also returning the new vertex and the two
    /// new edges (the one at the smaller endpoint first).
    pub fn refine_at(&self, e: &EdgeId, at: &S) -> Result<(Self, VertexId, [EdgeId; 2])> {
        let ends = self.graph.endpoints(e)?.clone();
        let len = self.length(e)?.clone();
        if !at.is_positive() || *at >= len {
            return Err(Error::OutOfRange { edge: e.clone(), at: format_scalar(at) });
        }
        let mid = VertexId::new(fresh_id(format!("sub:{e}:{}", format_scalar(at)), |id| {
            self.graph.has_vertex(&VertexId::from(id))
        }));
        let halves = [0, 1].map(|i| {
            EdgeId::new(fresh_id(format!("{e}:{i}"), |id| self.graph.has_edge(&EdgeId::from(id))))
        });
        let mut vertices = self.graph.vertex_set().clone();
        vertices.insert(mid.clone());
        let mut edges = self.graph.edge_map().clone();
        edges.remove(e);
        edges.insert(halves[0].clone(), Endpoints::new(ends.low().clone(), mid.clone()));
        edges.insert(halves[1].clone(), Endpoints::new(mid.clone(), ends.high().clone()));
        let mut lengths = self.lengths.clone();
        lengths.remove(e);
        lengths.insert(halves[0].clone(), at.clone());
        lengths.insert(halves[1].clone(), len - at.clone());
        let graph = Multigraph::from_parts(vertices, edges)?;
        Ok((MetricModel { graph, lengths }, mid, halves))
    }

    /// The model whose vertices are exactly the points of valence other than 2.
    ///
    /// Each chain of edges through 2-valent vertices becomes one edge carrying
    /// the smallest id of the chain and the total length.
    pub fn canonical_model(&self) -> Result<Self> {
        self.suppress_except(&BTreeSet::new())
    }

    /// The canonical model; a circle keeps its least vertex with one loop.
    pub fn canonical_model_marked(&self) -> Result<Self> {
        match self.canonical_model() {
            Err(Error::IsCircle) => {
                let least = self.graph.vertices().next().cloned().expect("graphs are nonempty");
                self.suppress_except(&BTreeSet::from([least]))
            }
            other => other,
        }
    }

    /// Suppresses every 2-valent vertex not listed in `keep`.
    pub fn suppress_except(&self, keep: &BTreeSet<VertexId>) -> Result<Self> {
        let mut vertices = self.graph.vertex_set().clone();
        let mut edges = self.graph.edge_map().clone();
        let mut lengths = self.lengths.clone();
        loop {
            let candidate = vertices.iter().find(|v| {
                !keep.contains(*v) && edges.values().map(|ends| ends.incidences(v)).sum::<usize>() == 2
            });
            let Some(v) = candidate.cloned() else { break };
            let incident: Vec<EdgeId> = edges
                .iter()
                .filter(|(_, ends)| ends.contains(&v))
                .map(|(e, _)| e.clone())
                .collect();
            if incident.len() == 1 {
                // a lone loop: nothing else is attached to this vertex
                return Err(Error::IsCircle);
            }
            let (e1, e2) = (&incident[0], &incident[1]);
            let a = edges[e1].other(&v).expect("incident").clone();
            let b = edges[e2].other(&v).expect("incident").clone();
            let length = lengths.remove(e1).expect("length") + lengths.remove(e2).expect("length");
            edges.remove(e1);
            edges.remove(e2);
            let merged = e1.clone().min(e2.clone());
            edges.insert(merged.clone(), Endpoints::new(a, b));
            lengths.insert(merged, length);
            vertices.remove(&v);
        }
        let graph = Multigraph::from_parts(vertices, edges)?;
        Ok(MetricModel { graph, lengths })
    }

    /// The canonical model with a midpoint vertex `loopmid:e` on each loop.
    pub fn loopless_canonical_model(&self) -> Result<Self> {
        self.canonical_model()?.split_loops_at_midpoints()
    }

    pub(crate) fn split_loops_at_midpoints(&self) -> Result<Self> {
        let (graph, splits) = self.graph.split_loops();
        let mut lengths = self.lengths.clone();
        let two = S::from_int(2);
        for (e, split) in splits {
            let half = lengths.remove(&e).expect("length") / two.clone();
            for h in split.halves {
                lengths.insert(h, half.clone());
            }
        }
        Ok(MetricModel { graph, lengths })
    }

    /// Sorted `(endpoint, endpoint, length)` triples; equal for models that
    /// differ only in edge names.
    pub fn signature(&self) -> Vec<(VertexId, VertexId, S)> {
        let mut sig: Vec<_> = self
            .graph
            .edges()
            .map(|(e, ends)| (ends.low().clone(), ends.high().clone(), self.lengths[e].clone()))
            .collect();
        sig.sort();
        sig
    }
}

/// A metric graph with nonnegative integer weights on the vertices of a
/// loopless model.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightedMetricGraph<S> {
    model: MetricModel<S>,
    weights: BTreeMap<VertexId, u64>,
}

impl<S: Scalar> WeightedMetricGraph<S> {
    pub fn new(model: MetricModel<S>, weights: BTreeMap<VertexId, u64>) -> Result<Self> {
        reject_loops(model.graph())?;
        let weights = check_weights(model.graph(), &weights)?;
        Ok(WeightedMetricGraph { model, weights })
    }

    pub fn unweighted(model: MetricModel<S>) -> Result<Self> {
        Self::new(model, BTreeMap::new())
    }

    pub fn model(&self) -> &MetricModel<S> {
        &self.model
    }

    pub fn graph(&self) -> &Multigraph {
        self.model.graph()
    }

    pub fn weight(&self, v: &VertexId) -> u64 {
        self.weights.get(v).copied().unwrap_or(0)
    }

    /// Nonzero weights only.
    pub fn weights(&self) -> &BTreeMap<VertexId, u64> {
        &self.weights
    }

    /// `g(Gamma) + sum w(v)`.
    pub fn genus(&self) -> u64 {
        self.model.genus() + self.weights.values().sum::<u64>()
    }

    /// `sum (val(v) - 2 + 2w(v))(v)`.
    pub fn canonical_divisor(&self) -> Divisor<VertexId> {
        let g = self.model.graph();
        g.vertices()
            .map(|v| (v.clone(), g.valency_unchecked(v) as i64 - 2 + 2 * self.weight(v) as i64))
            .collect()
    }

    /// `(G^w, l^w)`: virtual loops of length zero.
    pub fn pseudo_metric_graph(&self) -> PseudoMetricGraph<S> {
        self.with_virtual_loop_length(S::zero()).0
    }

    /// `Gamma_eps^w`: virtual loops of length `eps`.
    pub fn epsilon_metric_graph(&self, eps: &S) -> Result<MetricModel<S>> {
        if !eps.is_positive() {
            return Err(Error::NonPositiveEpsilon);
        }
        let p = self.with_virtual_loop_length(eps.clone()).0;
        MetricModel::new(p.graph, p.pseudo_lengths)
    }

    fn with_virtual_loop_length(&self, len: S) -> (PseudoMetricGraph<S>, Vec<EdgeId>) {
        let (graph, loops) = attach_virtual_loops(self.model.graph(), &self.weights);
        let mut lengths = self.model.lengths().clone();
        for e in &loops {
            lengths.insert(e.clone(), len.clone());
        }
        (PseudoMetricGraph { graph, pseudo_lengths: lengths }, loops)
    }
}

/// A model whose length function may vanish, but only on loops.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PseudoMetricGraph<S> {
    graph: Multigraph,
    pseudo_lengths: BTreeMap<EdgeId, S>,
}

impl<S: Scalar> PseudoMetricGraph<S> {
    pub fn new(graph: Multigraph, pseudo_lengths: BTreeMap<EdgeId, S>) -> Result<Self> {
        check_lengths(&graph, &pseudo_lengths)?;
        for (e, l) in &pseudo_lengths {
            if l.is_negative() {
                return Err(Error::NegativeLength { edge: e.clone(), length: format_scalar(l) });
            }
            if l.is_zero() && !graph.is_loop(e) {
                return Err(Error::ZeroLengthNonLoop(e.clone()));
            }
        }
        Ok(PseudoMetricGraph { graph, pseudo_lengths })
    }

    pub fn graph(&self) -> &Multigraph {
        &self.graph
    }

    pub fn pseudo_lengths(&self) -> &BTreeMap<EdgeId, S> {
        &self.pseudo_lengths
    }

    /// Turns each zero-length loop into one unit of weight at its vertex.
    ///
    /// Loops of positive length are not allowed in the resulting loopless model.
    pub fn to_weighted(&self) -> Result<WeightedMetricGraph<S>> {
        let mut weights: BTreeMap<VertexId, u64> = BTreeMap::new();
        let mut edges = Vec::new();
        let mut lengths = BTreeMap::new();
        for (e, ends) in self.graph.edges() {
            let l = &self.pseudo_lengths[e];
            if l.is_zero() {
                *weights.entry(ends.low().clone()).or_default() += 1;
            } else {
                edges.push((e.clone(), ends.low().clone(), ends.high().clone()));
                lengths.insert(e.clone(), l.clone());
            }
        }
        let graph = Multigraph::new(self.graph.vertices().cloned(), edges)?;
        WeightedMetricGraph::new(MetricModel::new(graph, lengths)?, weights)
    }
}

/// Inverse of [`WeightedMetricGraph::pseudo_metric_graph`].
pub fn from_pseudo_metric<S: Scalar>(p: &PseudoMetricGraph<S>) -> Result<WeightedMetricGraph<S>> {
    p.to_weighted()
}
