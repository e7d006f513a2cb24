//! Finite connected multigraphs with loops.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Vertex identifier, unique within its graph.
    VertexId
);
string_id!(
    /// Edge identifier, unique within its graph. Lives in its own namespace.
    EdgeId
);
string_id!(
    /// A tracked point on an abstract curve.
    PointId
);

/// Unordered endpoint pair, stored with `low <= high`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoints {
    low: VertexId,
    high: VertexId,
}

impl Endpoints {
    pub fn new(a: VertexId, b: VertexId) -> Self {
        if a <= b {
            Endpoints { low: a, high: b }
        } else {
            Endpoints { low: b, high: a }
        }
    }

    pub fn low(&self) -> &VertexId {
        &self.low
    }

    pub fn high(&self) -> &VertexId {
        &self.high
    }

    pub fn is_loop(&self) -> bool {
        self.low == self.high
    }

    pub fn contains(&self, v: &VertexId) -> bool {
        &self.low == v || &self.high == v
    }

    /// The endpoint opposite to `v` (`v` itself for a loop).
    pub fn other(&self, v: &VertexId) -> Option<&VertexId> {
        if &self.low == v {
            Some(&self.high)
        } else if &self.high == v {
            Some(&self.low)
        } else {
            None
        }
    }

    /// Number of incidences at `v`: 2 for a loop based at `v`.
    pub fn incidences(&self, v: &VertexId) -> usize {
        usize::from(&self.low == v) + usize::from(&self.high == v)
    }
}

/// A finite connected multigraph. Parallel edges and loops are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Multigraph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeMap<EdgeId, Endpoints>,
}

impl Multigraph {
    /// Builds and validates a multigraph.
    pub fn new<V, E>(vertices: V, edges: E) -> Result<Self>
    where
        V: IntoIterator<Item = VertexId>,
        E: IntoIterator<Item = (EdgeId, VertexId, VertexId)>,
    {
        let mut vs = BTreeSet::new();
        for v in vertices {
            if v.as_str().is_empty() {
                return Err(Error::EmptyId);
            }
            if !vs.insert(v.clone()) {
                return Err(Error::DuplicateVertex(v));
            }
        }
        let mut es = BTreeMap::new();
        for (e, a, b) in edges {
            if e.as_str().is_empty() {
                return Err(Error::EmptyId);
            }
            if es.contains_key(&e) {
                return Err(Error::DuplicateEdge(e));
            }
            es.insert(e, Endpoints::new(a, b));
        }
        let g = Multigraph { vertices: vs, edges: es };
        g.validate()?;
        Ok(g)
    }

    /// Convenience constructor from string slices.
    pub fn build(vertices: &[&str], edges: &[(&str, &str, &str)]) -> Result<Self> {
        Self::new(
            vertices.iter().map(|v| VertexId::from(*v)),
            edges
                .iter()
                .map(|(e, a, b)| (EdgeId::from(*e), VertexId::from(*a), VertexId::from(*b))),
        )
    }

    /// Checks that every endpoint is declared and that the graph is connected.
    pub fn validate(&self) -> Result<()> {
        for (e, ends) in &self.edges {
            for v in [&ends.low, &ends.high] {
                if !self.vertices.contains(v) {
                    return Err(Error::DanglingEndpoint {
                        edge: e.clone(),
                        vertex: v.clone(),
                    });
                }
            }
        }
        let components = self.component_count();
        if components != 1 {
            return Err(Error::Disconnected(components));
        }
        Ok(())
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = &VertexId> + '_ {
        self.vertices.iter()
    }

    pub fn vertex_set(&self) -> &BTreeSet<VertexId> {
        &self.vertices
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = (&EdgeId, &Endpoints)> + '_ {
        self.edges.iter()
    }

    pub fn edge_ids(&self) -> impl ExactSizeIterator<Item = &EdgeId> + '_ {
        self.edges.keys()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_vertex(&self, v: &VertexId) -> bool {
        self.vertices.contains(v)
    }

    pub fn has_edge(&self, e: &EdgeId) -> bool {
        self.edges.contains_key(e)
    }

    pub fn endpoints(&self, e: &EdgeId) -> Result<&Endpoints> {
        self.edges.get(e).ok_or_else(|| Error::UnknownEdge(e.clone()))
    }

    pub fn is_loop(&self, e: &EdgeId) -> bool {
        self.edges.get(e).is_some_and(Endpoints::is_loop)
    }

    pub fn has_loops(&self) -> bool {
        self.edges.values().any(Endpoints::is_loop)
    }

    pub fn loops(&self) -> impl Iterator<Item = (&EdgeId, &VertexId)> + '_ {
        self.edges
            .iter()
            .filter(|(_, ends)| ends.is_loop())
            .map(|(e, ends)| (e, ends.low()))
    }

    /// Number of edge-endpoint incidences at `v`; a loop counts twice.
    pub fn valency(&self, v: &VertexId) -> Result<usize> {
        if !self.has_vertex(v) {
            return Err(Error::UnknownVertex(v.clone()));
        }
        Ok(self.edges.values().map(|ends| ends.incidences(v)).sum())
    }

    pub(crate) fn valency_unchecked(&self, v: &VertexId) -> usize {
        self.edges.values().map(|ends| ends.incidences(v)).sum()
    }

    /// Edges incident to `v` in id order; a loop is listed once.
    pub fn incident_edges<'a>(&'a self, v: &'a VertexId) -> impl Iterator<Item = &'a EdgeId> + 'a {
        self.edges
            .iter()
            .filter(move |(_, ends)| ends.contains(v))
            .map(|(e, _)| e)
    }

    /// First Betti number `|E| - |V| + 1`.
    pub fn genus(&self) -> u64 {
        (self.edges.len() + 1 - self.vertices.len()) as u64
    }

    fn component_count(&self) -> usize {
        self.components_avoiding(None).len()
    }

    /// Connected components of the graph with `removed` (and its edges) deleted.
    pub fn components_avoiding(&self, removed: Option<&VertexId>) -> Vec<BTreeSet<VertexId>> {
        let mut adjacency: BTreeMap<&VertexId, Vec<&VertexId>> = BTreeMap::new();
        for ends in self.edges.values() {
            if Some(&ends.low) == removed || Some(&ends.high) == removed {
                continue;
            }
            adjacency.entry(&ends.low).or_default().push(&ends.high);
            adjacency.entry(&ends.high).or_default().push(&ends.low);
        }
        let mut seen: BTreeSet<&VertexId> = BTreeSet::new();
        let mut components = Vec::new();
        for start in &self.vertices {
            if Some(start) == removed || seen.contains(start) {
                continue;
            }
            let mut component = BTreeSet::new();
            let mut stack = vec![start];
            seen.insert(start);
            while let Some(v) = stack.pop() {
                component.insert(v.clone());
                for &w in adjacency.get(v).into_iter().flatten() {
                    if seen.insert(w) {
                        stack.push(w);
                    }
                }
            }
            components.push(component);
        }
        components
    }

    /// True when deleting `v` disconnects the graph.
    pub fn is_cut_vertex(&self, v: &VertexId) -> bool {
        self.has_vertex(v) && self.components_avoiding(Some(v)).len() > 1
    }

    /// Inserts a midpoint into every loop.
    ///
    /// A loop `e` at `v` becomes the vertex `loopmid:e` joined to `v` by the two
    /// parallel edges `e:0` and `e:1`. Returns the loop-to-midpoint map.
    pub fn subdivide_loops(&self) -> (Multigraph, BTreeMap<EdgeId, VertexId>) {
        let (g, split) = self.split_loops();
        (g, split.into_iter().map(|(e, s)| (e, s.midpoint)).collect())
    }

    pub(crate) fn split_loops(&self) -> (Multigraph, BTreeMap<EdgeId, LoopSplit>) {
        if !self.has_loops() {
            return (self.clone(), BTreeMap::new());
        }
        let mut vertices = self.vertices.clone();
        let mut edges = BTreeMap::new();
        let mut splits = BTreeMap::new();
        let taken_edges: BTreeSet<&EdgeId> = self.edges.keys().collect();
        for (e, ends) in &self.edges {
            if !ends.is_loop() {
                edges.insert(e.clone(), ends.clone());
            }
        }
        for (e, ends) in &self.edges {
            if !ends.is_loop() {
                continue;
            }
            let mid = fresh_vertex(&vertices, format!("loopmid:{e}"));
            vertices.insert(mid.clone());
            let halves = loop_halves(e).map(|half| {
                let half = fresh_edge(&taken_edges, &edges, half);
                edges.insert(half.clone(), Endpoints::new(ends.low.clone(), mid.clone()));
                half
            });
            splits.insert(e.clone(), LoopSplit { midpoint: mid, halves });
        }
        (Multigraph { vertices, edges }, splits)
    }

    /// Edge-induced subgraph on the given vertex set. The result is validated.
    pub fn induced(&self, keep: &BTreeSet<VertexId>) -> Result<Multigraph> {
        Multigraph::new(
            keep.iter().cloned(),
            self.edges
                .iter()
                .filter(|(_, ends)| keep.contains(&ends.low) && keep.contains(&ends.high))
                .map(|(e, ends)| (e.clone(), ends.low.clone(), ends.high.clone())),
        )
    }

    pub(crate) fn from_parts(
        vertices: BTreeSet<VertexId>,
        edges: BTreeMap<EdgeId, Endpoints>,
    ) -> Result<Multigraph> {
        let g = Multigraph { vertices, edges };
        g.validate()?;
        Ok(g)
    }

    pub(crate) fn edge_map(&self) -> &BTreeMap<EdgeId, Endpoints> {
        &self.edges
    }
}

/// How one loop was cut in two.
#[derive(Debug, Clone)]
pub(crate) struct LoopSplit {
    pub midpoint: VertexId,
    pub halves: [EdgeId; 2],
}

/// Ids of the two halves a loop is cut into.
pub(crate) fn loop_halves(e: &EdgeId) -> [EdgeId; 2] {
    [EdgeId::new(format!("{e}:0")), EdgeId::new(format!("{e}:1"))]
}

/// Appends primes to `base` until `taken` rejects it no more.
pub(crate) fn fresh_id(base: String, taken: impl Fn(&str) -> bool) -> String {
    let mut id = base;
    while taken(&id) {
        id.push('\'');
    }
    id
}

pub(crate) fn fresh_vertex(taken: &BTreeSet<VertexId>, base: String) -> VertexId {
    VertexId::new(fresh_id(base, |id| taken.contains(id)))
}

fn fresh_edge(
    original: &BTreeSet<&EdgeId>,
    built: &BTreeMap<EdgeId, Endpoints>,
    base: EdgeId,
) -> EdgeId {
    EdgeId::new(fresh_id(base.0, |id| {
        original.iter().any(|e| e.as_str() == id) || built.contains_key(id)
    }))
}

#[cfg(test)]
pub(crate) mod samples {
    use super::*;

    pub fn triangle() -> Multigraph {
        Multigraph::build(&["a", "b", "c"], &[("ab", "a", "b"), ("bc", "b", "c"), ("ca", "c", "a")])
            .unwrap()
    }

    /// Two triangles sharing the vertex `p`.
    pub fn bowtie() -> Multigraph {
        Multigraph::build(
            &["a", "b", "c", "d", "p"],
            &[
                ("pa", "p", "a"),
                ("ab", "a", "b"),
                ("bp", "b", "p"),
                ("pc", "p", "c"),
                ("cd", "c", "d"),
                ("dp", "d", "p"),
            ],
        )
        .unwrap()
    }

    pub fn path(n: usize) -> Multigraph {
        let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        Multigraph::new(
            names.iter().map(|s| VertexId::new(s.clone())),
            (1..n).map(|i| {
                (
                    EdgeId::new(format!("e{i}")),
                    VertexId::new(names[i - 1].clone()),
                    VertexId::new(names[i].clone()),
                )
            }),
        )
        .unwrap()
    }
}
