//! Vertex-weighted loopless graphs and their virtual graphs.

use std::collections::BTreeMap;

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Multigraph, VertexId};

/// A loopless connected graph with nonnegative vertex weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightedGraph {
    graph: Multigraph,
    weights: BTreeMap<VertexId, u64>,
}

pub(crate) fn reject_loops(g: &Multigraph) -> Result<()> {
    match g.loops().next() {
        Some((e, v)) => Err(Error::LoopNotAllowed { edge: e.clone(), vertex: v.clone() }),
        None => Ok(()),
    }
}

pub(crate) fn check_weights(g: &Multigraph, weights: &BTreeMap<VertexId, u64>) -> Result<BTreeMap<VertexId, u64>> {
    for v in weights.keys() {
        if !g.has_vertex(v) {
            return Err(Error::WeightOnUnknownVertex(v.clone()));
        }
    }
    Ok(weights.iter().filter(|(_, &w)| w > 0).map(|(v, &w)| (v.clone(), w)).collect())
}

/// Id of the `k`-th virtual loop at `v` (1-based).
pub fn virtual_loop_id(v: &VertexId, k: u64) -> EdgeId {
    EdgeId::new(format!("vloop:{v}:{k}"))
}

/// Adds `w(v)` loops at every vertex.
pub(crate) fn attach_virtual_loops(
    g: &Multigraph,
    weights: &BTreeMap<VertexId, u64>,
) -> (Multigraph, Vec<EdgeId>) {
    let mut loops = Vec::new();
    let mut edges: Vec<_> = g
        .edges()
        .map(|(e, ends)| (e.clone(), ends.low().clone(), ends.high().clone()))
        .collect();
    for (v, &w) in weights {
        for k in 1..=w {
            let mut id = virtual_loop_id(v, k);
            while g.has_edge(&id) {
                id = EdgeId::new(format!("{id}'"));
            }
            loops.push(id.clone());
            edges.push((id, v.clone(), v.clone()));
        }
    }
    let out = Multigraph::new(g.vertices().cloned(), edges)
        .expect("adding loops keeps a valid graph valid");
    (out, loops)
}

impl WeightedGraph {
    pub fn new(graph: Multigraph, weights: BTreeMap<VertexId, u64>) -> Result<Self> {
        reject_loops(&graph)?;
        let weights = check_weights(&graph, &weights)?;
        Ok(WeightedGraph { graph, weights })
    }

    /// A weighted graph with all weights zero.
    pub fn unweighted(graph: Multigraph) -> Result<Self> {
        Self::new(graph, BTreeMap::new())
    }

    pub fn graph(&self) -> &Multigraph {
        &self.graph
    }

    pub fn weight(&self, v: &VertexId) -> u64 {
        self.weights.get(v).copied().unwrap_or(0)
    }

    /// Nonzero weights only.
    pub fn weights(&self) -> &BTreeMap<VertexId, u64> {
        &self.weights
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().sum()
    }

    /// `G^w`: `w(v)` loops `vloop:v:k` attached at each `v`.
    pub fn virtual_graph(&self) -> Multigraph {
        attach_virtual_loops(&self.graph, &self.weights).0
    }

    /// `g(G, w) = b1(G) + sum w(v)`.
    pub fn genus(&self) -> u64 {
        self.graph.genus() + self.total_weight()
    }

    /// `K = sum (2w(v) - 2 + val(v))(v)`.
    pub fn canonical_divisor(&self) -> Divisor<VertexId> {
        self.graph
            .vertices()
            .map(|v| {
                let c = 2 * self.weight(v) as i64 - 2 + self.graph.valency_unchecked(v) as i64;
                (v.clone(), c)
            })
            .collect()
    }
}
