//! Metrized complexes of abstract curves and their harmonic morphisms.
//!
//! A curve is only its genus, a finite set of tracked points and optionally an
//! explicit canonical divisor on those points. When the canonical divisor is
//! absent it is carried symbolically by its degree `2g - 2`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Multigraph, PointId, VertexId};
use crate::metric::WeightedMetricGraph;
use crate::morphism::{Category, Certificate, EdgeImage, GraphMorphism, Morphism, WeightedMetricMorphism};
use crate::scalar::{format_scalar, Scalar};

/// A curve of genus `genus` with finitely many tracked points.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbstractCurve {
    pub genus: u64,
    pub points: BTreeSet<PointId>,
    pub canonical: Option<Divisor<PointId>>,
}

impl AbstractCurve {
    pub fn new(genus: u64, points: impl IntoIterator<Item = PointId>) -> Self {
        AbstractCurve { genus, points: points.into_iter().collect(), canonical: None }
    }

    pub fn with_canonical(mut self, k: Divisor<PointId>) -> Self {
        self.canonical = Some(k);
        self
    }

    pub fn canonical_degree(&self) -> i64 {
        2 * self.genus as i64 - 2
    }
}

/// A point of the metric graph: a model vertex or an interior point of an
/// edge at some distance from its smaller endpoint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GammaPoint<S> {
    Vertex(VertexId),
    Interior { edge: EdgeId, offset: S },
}

impl<S: Scalar> fmt::Display for GammaPoint<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaPoint::Vertex(v) => write!(f, "{v}"),
            GammaPoint::Interior { edge, offset } => write!(f, "{edge}@{}", format_scalar(offset)),
        }
    }
}

/// The part of a complex divisor living on one curve: explicit points plus an
/// optional symbolic summand known only by its degree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct CurveDivisor {
    pub points: Divisor<PointId>,
    pub symbolic: Option<i64>,
}

impl CurveDivisor {
    pub fn explicit(points: Divisor<PointId>) -> Self {
        CurveDivisor { points, symbolic: None }
    }

    pub fn degree(&self) -> i64 {
        self.points.degree() + self.symbolic.unwrap_or(0)
    }

    pub fn is_explicit(&self) -> bool {
        self.symbolic.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.points.is_zero() && self.symbolic.unwrap_or(0) == 0
    }

    fn add(&mut self, other: &CurveDivisor) {
        self.points += &other.points;
        self.symbolic = match (self.symbolic, other.symbolic) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(0) + b.unwrap_or(0)),
        };
    }

    fn scaled(&self, k: i64) -> CurveDivisor {
        CurveDivisor { points: self.points.scaled(k), symbolic: self.symbolic.map(|s| s * k) }
    }
}

/// A divisor on a metrized complex: a graphical part on the metric graph and
/// one part per curve.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ComplexDivisor<S: Ord> {
    pub graphical: Divisor<GammaPoint<S>>,
    pub per_curve: BTreeMap<VertexId, CurveDivisor>,
}

impl<S: Scalar> Default for ComplexDivisor<S> {
    fn default() -> Self {
        ComplexDivisor { graphical: Divisor::zero(), per_curve: BTreeMap::new() }
    }
}

impl<S: Scalar> ComplexDivisor<S> {
    pub fn degree(&self) -> i64 {
        self.graphical.degree() + self.per_curve.values().map(CurveDivisor::degree).sum::<i64>()
    }

    /// `D_Gamma`: graphical part plus `deg(D_v)(v)` for each curve.
    pub fn gamma_part(&self) -> Divisor<GammaPoint<S>> {
        let mut out = self.graphical.clone();
        for (v, part) in &self.per_curve {
            out.add_at(GammaPoint::Vertex(v.clone()), part.degree());
        }
        out
    }

    /// The Gamma-part restricted to model vertices.
    pub fn vertex_gamma_part(&self) -> Divisor<VertexId> {
        let mut out = Divisor::zero();
        for (p, c) in self.gamma_part().iter() {
            if let GammaPoint::Vertex(v) = p {
                out.add_at(v.clone(), c);
            }
        }
        out
    }

    pub fn curve_part(&self, v: &VertexId) -> CurveDivisor {
        self.per_curve.get(v).cloned().unwrap_or_default()
    }

    fn add_curve(&mut self, v: &VertexId, part: &CurveDivisor) {
        let slot = self.per_curve.entry(v.clone()).or_default();
        slot.add(part);
        if slot.is_zero() {
            self.per_curve.remove(v);
        }
    }

    /// Coefficientwise sum.
    pub fn plus(&self, other: &ComplexDivisor<S>) -> ComplexDivisor<S> {
        let mut out = self.clone();
        out.graphical += &other.graphical;
        for (v, part) in &other.per_curve {
            out.add_curve(v, part);
        }
        out
    }

    pub fn scaled(&self, k: i64) -> ComplexDivisor<S> {
        let mut out = ComplexDivisor { graphical: self.graphical.scaled(k), per_curve: BTreeMap::new() };
        for (v, part) in &self.per_curve {
            out.add_curve(v, &part.scaled(k));
        }
        out
    }
}

/// A metrized complex over a loopless weighted metric graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetrizedComplex<S> {
    skeleton: WeightedMetricGraph<S>,
    curves: BTreeMap<VertexId, AbstractCurve>,
    reductions: BTreeMap<VertexId, BTreeMap<EdgeId, PointId>>,
}

impl<S: Scalar> MetrizedComplex<S> {
    /// `reductions[v]` sends each edge at `v` to its marked point on the curve at `v`.
    pub fn new(
        skeleton: WeightedMetricGraph<S>,
        curves: BTreeMap<VertexId, AbstractCurve>,
        reductions: BTreeMap<VertexId, BTreeMap<EdgeId, PointId>>,
    ) -> Result<Self> {
        let g = skeleton.graph();
        for v in curves.keys().chain(reductions.keys()) {
            if !g.has_vertex(v) {
                return Err(Error::UnknownVertex(v.clone()));
            }
        }
        for v in g.vertices() {
            let curve = curves.get(v).ok_or_else(|| Error::InvalidCurve {
                vertex: v.clone(),
                reason: "no curve attached".into(),
            })?;
            if let Some(k) = &curve.canonical {
                if k.degree() != curve.canonical_degree() {
                    return Err(Error::InvalidCurve {
                        vertex: v.clone(),
                        reason: format!(
                            "canonical divisor has degree {} instead of {}",
                            k.degree(),
                            curve.canonical_degree()
                        ),
                    });
                }
                if let Some(p) = k.support().find(|p| !curve.points.contains(*p)) {
                    return Err(Error::InvalidCurve {
                        vertex: v.clone(),
                        reason: format!("canonical divisor uses untracked point {p}"),
                    });
                }
            }
            let empty = BTreeMap::new();
            let red = reductions.get(v).unwrap_or(&empty);
            let incident: BTreeSet<&EdgeId> = g.incident_edges(v).collect();
            let bad = |reason: String| Error::InvalidReduction { vertex: v.clone(), reason };
            if let Some(e) = incident.iter().find(|e| !red.contains_key(**e)) {
                return Err(bad(format!("edge {e} has no marked point")));
            }
            if let Some(e) = red.keys().find(|e| !incident.contains(e)) {
                return Err(bad(format!("edge {e} is not incident")));
            }
            let mut seen = BTreeSet::new();
            for (e, p) in red {
                if !curve.points.contains(p) {
                    return Err(bad(format!("marked point {p} of edge {e} is not on the curve")));
                }
                if !seen.insert(p) {
                    return Err(bad(format!("marked point {p} used twice")));
                }
            }
        }
        Ok(MetrizedComplex { skeleton, curves, reductions })
    }

    /// Every vertex gets a genus-0 curve whose points are the edge names.
    pub fn rational(skeleton: WeightedMetricGraph<S>) -> Result<Self> {
        Self::with_genera(skeleton, &BTreeMap::new())
    }

    /// Curves of the given genera with one marked point per incident edge,
    /// named after the edge.
    pub fn with_genera(skeleton: WeightedMetricGraph<S>, genera: &BTreeMap<VertexId, u64>) -> Result<Self> {
        let g = skeleton.graph();
        let mut curves = BTreeMap::new();
        let mut reductions = BTreeMap::new();
        for v in g.vertices() {
            let red: BTreeMap<EdgeId, PointId> =
                g.incident_edges(v).map(|e| (e.clone(), PointId::new(e.as_str()))).collect();
            let genus = genera.get(v).copied().unwrap_or(0);
            curves.insert(v.clone(), AbstractCurve::new(genus, red.values().cloned()));
            reductions.insert(v.clone(), red);
        }
        Self::new(skeleton, curves, reductions)
    }

    pub fn skeleton(&self) -> &WeightedMetricGraph<S> {
        &self.skeleton
    }

    pub fn graph(&self) -> &Multigraph {
        self.skeleton.graph()
    }

    pub fn curves(&self) -> &BTreeMap<VertexId, AbstractCurve> {
        &self.curves
    }

    pub fn curve(&self, v: &VertexId) -> Result<&AbstractCurve> {
        self.curves.get(v).ok_or_else(|| Error::UnknownVertex(v.clone()))
    }

    pub fn reductions(&self) -> &BTreeMap<VertexId, BTreeMap<EdgeId, PointId>> {
        &self.reductions
    }

    /// `red_v(e)`.
    pub fn marked_point(&self, v: &VertexId, e: &EdgeId) -> Result<&PointId> {
        self.reductions
            .get(v)
            .and_then(|r| r.get(e))
            .ok_or_else(|| Error::UnknownEdge(e.clone()))
    }

    /// `A_v`: the sum of the marked points at `v`.
    pub fn marked_divisor(&self, v: &VertexId) -> Divisor<PointId> {
        self.reductions
            .get(v)
            .map(|r| r.values().map(|p| (p.clone(), 1)).collect())
            .unwrap_or_default()
    }

    /// `g(Gamma, w) + sum g_v`.
    pub fn genus(&self) -> u64 {
        self.skeleton.genus() + self.curves.values().map(|c| c.genus).sum::<u64>()
    }

    /// `sum (K_v + A_v) + sum 2w(v)(v)`, with `K_v` symbolic where no explicit
    /// representative is stored.
    pub fn canonical_divisor(&self) -> ComplexDivisor<S> {
        let mut out = ComplexDivisor::default();
        for (v, curve) in &self.curves {
            let mut part = match &curve.canonical {
                Some(k) => CurveDivisor::explicit(k.clone()),
                None => CurveDivisor { points: Divisor::zero(), symbolic: Some(curve.canonical_degree()) },
            };
            part.points += &self.marked_divisor(v);
            out.add_curve(v, &part);
            out.graphical.add_at(GammaPoint::Vertex(v.clone()), 2 * self.skeleton.weight(v) as i64);
        }
        out
    }

    /// The canonical divisor with every `K_v` explicit.
    pub fn canonical_divisor_explicit(&self) -> Result<ComplexDivisor<S>> {
        if let Some((v, _)) = self.curves.iter().find(|(_, c)| c.canonical.is_none()) {
            return Err(Error::MissingCanonicalRep(v.clone()));
        }
        Ok(self.canonical_divisor())
    }

    /// `sum (val(v) + 2g_v - 2 + 2w(v))(v)`, the Gamma-part of the canonical divisor.
    pub fn canonical_gamma_part(&self) -> Divisor<VertexId> {
        let g = self.graph();
        g.vertices()
            .map(|v| {
                let c = g.valency_unchecked(v) as i64 + 2 * self.curves[v].genus as i64 - 2
                    + 2 * self.skeleton.weight(v) as i64;
                (v.clone(), c)
            })
            .collect()
    }

    /// Checks that a divisor only uses points of this complex.
    pub fn check_divisor(&self, d: &ComplexDivisor<S>) -> Result<()> {
        for p in d.graphical.support() {
            match p {
                GammaPoint::Vertex(v) if !self.graph().has_vertex(v) => {
                    return Err(Error::UnknownVertex(v.clone()))
                }
                GammaPoint::Interior { edge, offset } => {
                    let len = self.skeleton.model().length(edge)?;
                    if !offset.is_positive() || offset >= len {
                        return Err(Error::OutOfRange { edge: edge.clone(), at: format_scalar(offset) });
                    }
                }
                _ => {}
            }
        }
        for (v, part) in &d.per_curve {
            let curve = self.curve(v)?;
            if let Some(p) = part.points.support().find(|p| !curve.points.contains(*p)) {
                return Err(Error::InvalidCurve {
                    vertex: v.clone(),
                    reason: format!("point {p} is not tracked"),
                });
            }
        }
        Ok(())
    }
}

/// A finite morphism of curves known on finitely many points.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CurveCover {
    pub degree: u64,
    pub point_map: BTreeMap<PointId, PointId>,
    /// Ramification indices; mapped points without an entry are unramified.
    pub ramification: BTreeMap<PointId, u64>,
}

impl CurveCover {
    pub fn new(degree: u64) -> Self {
        CurveCover { degree, point_map: BTreeMap::new(), ramification: BTreeMap::new() }
    }

    /// Declares `x -> image` with ramification index `e`.
    pub fn with_point(mut self, x: impl Into<PointId>, image: impl Into<PointId>, e: u64) -> Self {
        let x = x.into();
        self.point_map.insert(x.clone(), image.into());
        if e != 1 {
            self.ramification.insert(x, e);
        }
        self
    }

    pub fn ramification_index(&self, x: &PointId) -> u64 {
        self.ramification.get(x).copied().unwrap_or(1)
    }

    /// Declared preimages of `image` with their ramification indices.
    pub fn fiber<'a>(&'a self, image: &'a PointId) -> impl Iterator<Item = (&'a PointId, u64)> + 'a {
        self.point_map
            .iter()
            .filter(move |(_, y)| *y == image)
            .map(|(x, _)| (x, self.ramification_index(x)))
    }

    /// True when the declared preimages of `image` account for the whole degree.
    pub fn fiber_is_complete(&self, image: &PointId) -> bool {
        self.fiber(image).map(|(_, e)| e).sum::<u64>() == self.degree
    }

    /// `phi_v^*((x'))`; the fiber must be fully declared.
    pub fn pullback_point(&self, owner: &VertexId, image: &PointId) -> Result<Divisor<PointId>> {
        if !self.fiber_is_complete(image) {
            return Err(Error::UndeclaredFiber { vertex: owner.clone(), point: image.to_string() });
        }
        Ok(self.fiber(image).map(|(x, e)| (x.clone(), e as i64)).collect())
    }

    /// Pulls back the explicit points; a symbolic summand scales by the degree.
    pub fn pullback(&self, owner: &VertexId, d: &CurveDivisor) -> Result<CurveDivisor> {
        let mut points = Divisor::zero();
        for (x, c) in d.points.iter() {
            points += &self.pullback_point(owner, x)?.scaled(c);
        }
        Ok(CurveDivisor { points, symbolic: d.symbolic.map(|s| s * self.degree as i64) })
    }
}

/// Which requirement of a harmonic morphism of complexes failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexCondition {
    /// The skeleton map is not a harmonic weighted metric morphism.
    Skeleton,
    /// `phi_v(red_v(e)) = red_{phi(v)}(phi(e))`.
    Reduction,
    /// The ramification index at `red_v(e)` equals the slope of `e`.
    Ramification,
    /// Preimages of marked points are marked.
    MarkedPreimage,
    /// `M(v) = deg(phi_v)`, with a cover present exactly when `M(v) > 0`.
    CoverDegree,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexViolation {
    pub condition: ComplexCondition,
    pub vertex: Option<VertexId>,
    pub detail: String,
}

impl fmt::Display for ComplexViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.vertex {
            Some(v) => write!(f, "{:?} at {v}: {}", self.condition, self.detail),
            None => write!(f, "{:?}: {}", self.condition, self.detail),
        }
    }
}

/// Outcome of a successful validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexCertificate {
    pub skeleton: Certificate,
    /// For each source vertex with a cover, the target marked points whose
    /// fiber was fully declared.
    pub complete_fibers: BTreeMap<VertexId, BTreeSet<PointId>>,
}

/// A skeleton morphism together with covers of the curves over vertices of
/// positive multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexMorphism<S> {
    source: MetrizedComplex<S>,
    target: MetrizedComplex<S>,
    skeleton: WeightedMetricMorphism<S>,
    covers: BTreeMap<VertexId, CurveCover>,
}

impl<S: Scalar> ComplexMorphism<S> {
    /// Checks the data is well formed; harmonicity is decided by [`validate`](Self::validate).
    pub fn new(
        source: MetrizedComplex<S>,
        target: MetrizedComplex<S>,
        map: GraphMorphism,
        covers: BTreeMap<VertexId, CurveCover>,
    ) -> Result<Self> {
        let skeleton =
            WeightedMetricMorphism::new(source.skeleton.clone(), target.skeleton.clone(), map)?;
        for (v, cover) in &covers {
            let image = skeleton.map().image(v)?;
            let bad = |reason: String| Error::InvalidCover { vertex: v.clone(), reason };
            if cover.degree == 0 {
                return Err(bad("degree must be positive".into()));
            }
            let here = &source.curves[v];
            let there = &target.curves[image];
            for (x, y) in &cover.point_map {
                if !here.points.contains(x) {
                    return Err(bad(format!("{x} is not tracked on the source curve")));
                }
                if !there.points.contains(y) {
                    return Err(bad(format!("{y} is not tracked on the target curve")));
                }
            }
            for (x, &e) in &cover.ramification {
                if !cover.point_map.contains_key(x) {
                    return Err(bad(format!("ramification given for unmapped point {x}")));
                }
                if e == 0 || e > cover.degree {
                    return Err(bad(format!("ramification index {e} at {x} is out of range")));
                }
            }
            let images: BTreeSet<&PointId> = cover.point_map.values().collect();
            for y in images {
                let total: u64 = cover.fiber(y).map(|(_, e)| e).sum();
                if total > cover.degree {
                    return Err(bad(format!("fiber over {y} has total index {total} > {}", cover.degree)));
                }
            }
        }
        Ok(ComplexMorphism { source, target, skeleton, covers })
    }

    pub fn identity(c: &MetrizedComplex<S>) -> Result<Self> {
        let covers = c
            .curves
            .iter()
            .map(|(v, curve)| {
                let cover = CurveCover {
                    degree: 1,
                    point_map: curve.points.iter().map(|p| (p.clone(), p.clone())).collect(),
                    ramification: BTreeMap::new(),
                };
                (v.clone(), cover)
            })
            .collect();
        Self::new(c.clone(), c.clone(), GraphMorphism::identity(c.graph()), covers)
    }

    pub fn source(&self) -> &MetrizedComplex<S> {
        &self.source
    }

    pub fn target(&self) -> &MetrizedComplex<S> {
        &self.target
    }

    pub fn skeleton(&self) -> &WeightedMetricMorphism<S> {
        &self.skeleton
    }

    pub fn covers(&self) -> &BTreeMap<VertexId, CurveCover> {
        &self.covers
    }

    /// Checks every requirement and reports the first failure, scanning
    /// vertices in order.
    pub fn validate(&self) -> std::result::Result<ComplexCertificate, ComplexViolation> {
        let violation = |condition, vertex: Option<&VertexId>, detail: String| ComplexViolation {
            condition,
            vertex: vertex.cloned(),
            detail,
        };
        let cert = self
            .skeleton
            .certify()
            .map_err(|e| violation(ComplexCondition::Skeleton, None, e.to_string()))?;
        let slack = self.skeleton.local_ramification(&cert);
        if let Some((v, s)) = slack.iter().find(|(_, &s)| s < 0) {
            return Err(violation(
                ComplexCondition::Skeleton,
                Some(v),
                format!("local ramification {s} is negative"),
            ));
        }
        let map = self.skeleton.map();
        let mut complete_fibers = BTreeMap::new();
        for v in self.source.graph().vertices() {
            let m = cert.multiplicity(v);
            let image = &map.vertex_map()[v];
            let cover = match (self.covers.get(v), m) {
                (None, 0) => continue,
                (Some(_), 0) => {
                    return Err(violation(
                        ComplexCondition::CoverDegree,
                        Some(v),
                        "cover given at a vertex of multiplicity 0".into(),
                    ))
                }
                (None, _) => {
                    return Err(violation(ComplexCondition::CoverDegree, Some(v), format!("no cover but M = {m}")))
                }
                (Some(c), _) => c,
            };
            if cover.degree != m {
                return Err(violation(
                    ComplexCondition::CoverDegree,
                    Some(v),
                    format!("cover degree {} differs from M = {m}", cover.degree),
                ));
            }
            let red = &self.source.reductions[v];
            let red_image = &self.target.reductions[image];
            for e in self.source.graph().incident_edges(v) {
                let EdgeImage::Edge(f) = &map.edge_map()[e] else { continue };
                let x = &red[e];
                let expected = &red_image[f];
                if cover.point_map.get(x) != Some(expected) {
                    return Err(violation(
                        ComplexCondition::Reduction,
                        Some(v),
                        format!("marked point {x} of edge {e} should map to {expected}"),
                    ));
                }
                let u = self.skeleton.slope(e).expect("slope of a source edge");
                if cover.ramification_index(x) != u {
                    return Err(violation(
                        ComplexCondition::Ramification,
                        Some(v),
                        format!("index {} at {x} but slope of {e} is {u}", cover.ramification_index(x)),
                    ));
                }
            }
            let marked: BTreeSet<&PointId> = red.values().collect();
            let mut complete = BTreeSet::new();
            for y in red_image.values() {
                if let Some((x, _)) = cover.fiber(y).find(|(x, _)| !marked.contains(x)) {
                    return Err(violation(
                        ComplexCondition::MarkedPreimage,
                        Some(v),
                        format!("{x} lies over the marked point {y} but is not marked"),
                    ));
                }
                if cover.fiber_is_complete(y) {
                    complete.insert(y.clone());
                }
            }
            complete_fibers.insert(v.clone(), complete);
        }
        Ok(ComplexCertificate { skeleton: cert, complete_fibers })
    }

    pub fn is_harmonic(&self) -> bool {
        self.validate().is_ok()
    }

    /// Skeleton degree, checked against the sum of cover degrees over every target vertex.
    pub fn degree(&self) -> Result<u64> {
        let cert = self.skeleton.certify()?;
        let map = self.skeleton.map();
        let mut sums: BTreeMap<&VertexId, u64> = self.target.graph().vertices().map(|v| (v, 0)).collect();
        for (v, cover) in &self.covers {
            *sums.get_mut(&map.vertex_map()[v]).expect("image") += cover.degree;
        }
        if let Some((v, s)) = sums.iter().find(|(_, &s)| s != cert.degree) {
            return Err(Error::InconsistentDegree(format!(
                "skeleton degree {} but covers over {v} have total degree {s}",
                cert.degree
            )));
        }
        Ok(cert.degree)
    }

    /// Pullback of a divisor on the target complex.
    ///
    /// Vertex points pull back along the skeleton; a point `x'` on the curve at
    /// `v'` pulls back to `phi_v^*((x'))` on every curve over `v'`.
    pub fn pullback(&self, d: &ComplexDivisor<S>) -> Result<ComplexDivisor<S>> {
        self.target.check_divisor(d)?;
        let cert = self.skeleton.certify()?;
        let map = self.skeleton.map();
        let mut out = ComplexDivisor::default();
        for (p, c) in d.graphical.iter() {
            match p {
                GammaPoint::Vertex(image) => {
                    for (v, w) in map.vertex_map() {
                        if w == image {
                            out.graphical.add_at(GammaPoint::Vertex(v.clone()), c * cert.multiplicity(v) as i64);
                        }
                    }
                }
                GammaPoint::Interior { .. } => return Err(Error::UnsupportedPoint(p.to_string())),
            }
        }
        for (image, part) in &d.per_curve {
            for (v, w) in map.vertex_map() {
                if w != image {
                    continue;
                }
                if let Some(cover) = self.covers.get(v) {
                    out.add_curve(v, &cover.pullback(v, part)?);
                }
            }
        }
        Ok(out)
    }

    /// `A_v - phi_v^*(A_{phi(v)})` from the cover data, when every fiber over a
    /// marked point is declared.
    pub fn marked_difference(&self, v: &VertexId) -> Result<Divisor<PointId>> {
        let a_v = self.source.marked_divisor(v);
        let Some(cover) = self.covers.get(v) else {
            return Ok(a_v);
        };
        let image = self.skeleton.map().image(v)?;
        let pulled = cover.pullback(v, &CurveDivisor::explicit(self.target.marked_divisor(image)))?;
        Ok(&a_v - &pulled.points)
    }

    /// `sum_{e at v} (1 - U(e)) (red_v(e))`, what [`marked_difference`](Self::marked_difference) should be.
    pub fn expected_marked_difference(&self, v: &VertexId) -> Divisor<PointId> {
        self.source.reductions[v]
            .iter()
            .map(|(e, x)| (x.clone(), 1 - self.skeleton.slope(e).expect("slope") as i64))
            .collect()
    }

    /// `K_v - phi_v^*(K_{phi(v)})` when both canonical divisors are explicit and
    /// the needed fibers are declared.
    pub fn canonical_difference(&self, v: &VertexId) -> Option<Divisor<PointId>> {
        let k_v = self.source.curves[v].canonical.clone()?;
        let Some(cover) = self.covers.get(v) else {
            return Some(k_v);
        };
        let image = self.skeleton.map().image(v).ok()?;
        let k_image = self.target.curves[image].canonical.clone()?;
        let pulled = cover.pullback(v, &CurveDivisor::explicit(k_image)).ok()?;
        Some(&k_v - &pulled.points)
    }
}

impl<S: Scalar> Morphism for ComplexMorphism<S> {
    fn category(&self) -> Category {
        Category::Complex
    }

    fn map(&self) -> &GraphMorphism {
        self.skeleton.map()
    }

    fn edge_multiplicity(&self, e: &EdgeId) -> u64 {
        self.skeleton.slope(e).expect("slope of a source edge")
    }

    /// Full validation; theorem checks on complexes need more than the skeleton.
    fn certificate(&self) -> Result<Certificate> {
        self.validate().map(|c| c.skeleton).map_err(|v| Error::NotHarmonic(v.to_string()))
    }

    fn source_weight(&self, v: &VertexId) -> u64 {
        self.source.skeleton.weight(v)
    }

    fn target_weight(&self, v: &VertexId) -> u64 {
        self.target.skeleton.weight(v)
    }

    fn source_curve_genus(&self, v: &VertexId) -> u64 {
        self.source.curves[v].genus
    }

    fn target_curve_genus(&self, v: &VertexId) -> u64 {
        self.target.curves[v].genus
    }

    fn source_canonical(&self) -> Divisor<VertexId> {
        self.source.canonical_gamma_part()
    }

    fn target_canonical(&self) -> Divisor<VertexId> {
        self.target.canonical_gamma_part()
    }
}

#[cfg(test)]
pub(crate) mod samples {
    use super::*;
    use crate::metric::MetricModel;
    use num_rational::Rational64;

    pub type Q = Rational64;

    pub fn skeleton(vertices: &[&str], edges: &[(&str, &str, &str, i64)]) -> WeightedMetricGraph<Q> {
        let g = Multigraph::build(
            vertices,
            &edges.iter().map(|(e, a, b, _)| (*e, *a, *b)).collect::<Vec<_>>(),
        )
        .unwrap();
        let lengths = edges.iter().map(|(e, _, _, l)| (EdgeId::from(*e), Q::from_integer(*l))).collect();
        WeightedMetricGraph::unweighted(MetricModel::new(g, lengths).unwrap()).unwrap()
    }

    /// Two genus-1 curves joined by an edge of length 1, folded onto a genus-0
    /// curve with a half-length tail; a degree-2 map ramified at the marked points.
    pub fn folded_pair() -> ComplexMorphism<Q> {
        let src = skeleton(&["x", "y"], &[("e", "x", "y", 1)]);
        let src = MetrizedComplex::with_genera(src, &BTreeMap::from([("x".into(), 1), ("y".into(), 1)]))
            .unwrap();
        let tgt = skeleton(&["o", "t"], &[("f", "o", "t", 2)]);
        let tgt = MetrizedComplex::with_genera(tgt, &BTreeMap::new()).unwrap();
        let map = GraphMorphism::build(
            src.graph().clone(),
            tgt.graph().clone(),
            &[("x", "o"), ("y", "t")],
            &[("e", "f")],
        )
        .unwrap();
        let covers = BTreeMap::from([
            ("x".into(), CurveCover::new(2).with_point("e", "f", 2)),
            ("y".into(), CurveCover::new(2).with_point("e", "f", 2)),
        ]);
        ComplexMorphism::new(src, tgt, map, covers).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::samples::*;
    use super::*;

    fn v(s: &str) -> VertexId {
        s.into()
    }

    fn p(s: &str) -> PointId {
        s.into()
    }

    #[test]
    fn genus_examples() {
        let lone = skeleton(&["v"], &[]);
        let c = MetrizedComplex::with_genera(lone, &BTreeMap::from([(v("v"), 3)])).unwrap();
        assert_eq!(c.genus(), 3);
        let tri = skeleton(&["a", "b", "c"], &[("ab", "a", "b", 1), ("bc", "b", "c", 1), ("ca", "c", "a", 1)]);
        assert_eq!(MetrizedComplex::rational(tri).unwrap().genus(), 1);
    }

    #[test]
    fn canonical_degree() {
        let tri = skeleton(&["a", "b", "c"], &[("ab", "a", "b", 1), ("bc", "b", "c", 1), ("ca", "c", "a", 1)]);
        let c = MetrizedComplex::with_genera(tri, &BTreeMap::from([(v("a"), 2)])).unwrap();
        let k = c.canonical_divisor();
        assert_eq!(k.degree(), 2 * c.genus() as i64 - 2);
        assert_eq!(k.vertex_gamma_part(), c.canonical_gamma_part());
        assert_eq!(c.canonical_divisor_explicit().unwrap_err(), Error::MissingCanonicalRep(v("a")));
    }

    #[test]
    fn explicit_rational_canonical() {
        let seg = skeleton(&["a", "b"], &[("e", "a", "b", 1), ("f", "a", "b", 1)]);
        let mut c = MetrizedComplex::rational(seg).unwrap();
        let k: Divisor<PointId> = [(p("e"), -1), (p("f"), -1)].into_iter().collect();
        let curves = c
            .curves()
            .iter()
            .map(|(x, curve)| (x.clone(), curve.clone().with_canonical(k.clone())))
            .collect();
        c = MetrizedComplex::new(c.skeleton().clone(), curves, c.reductions().clone()).unwrap();
        let kc = c.canonical_divisor_explicit().unwrap();
        assert_eq!(kc.curve_part(&v("a")).degree(), 0);
        assert!(kc.curve_part(&v("a")).is_explicit());
        assert_eq!(kc.degree(), 2 * c.genus() as i64 - 2);
    }

    #[test]
    fn bad_reductions() {
        let seg = skeleton(&["a", "b"], &[("e", "a", "b", 1)]);
        let curves = BTreeMap::from([
            (v("a"), AbstractCurve::new(0, [p("x")])),
            (v("b"), AbstractCurve::new(0, [p("x")])),
        ]);
        let reds = BTreeMap::from([(v("a"), BTreeMap::from([("e".into(), p("x"))]))]);
        assert!(matches!(
            MetrizedComplex::new(seg.clone(), curves.clone(), reds),
            Err(Error::InvalidReduction { .. })
        ));
        let wrong_k = BTreeMap::from([
            (v("a"), AbstractCurve::new(0, [p("x")]).with_canonical(Divisor::point(p("x"), -1))),
            (v("b"), AbstractCurve::new(0, [p("x")])),
        ]);
        let reds = BTreeMap::from([
            (v("a"), BTreeMap::from([("e".into(), p("x"))])),
            (v("b"), BTreeMap::from([("e".into(), p("x"))])),
        ]);
        assert!(matches!(MetrizedComplex::new(seg, wrong_k, reds), Err(Error::InvalidCurve { .. })));
    }

    #[test]
    fn identity_is_valid() {
        let tri = skeleton(&["a", "b", "c"], &[("ab", "a", "b", 1), ("bc", "b", "c", 1), ("ca", "c", "a", 1)]);
        let c = MetrizedComplex::with_genera(tri, &BTreeMap::from([(v("b"), 1)])).unwrap();
        let id = ComplexMorphism::identity(&c).unwrap();
        assert!(id.validate().is_ok());
        assert_eq!(id.degree().unwrap(), 1);
        let k = c.canonical_divisor();
        assert_eq!(id.pullback(&k).unwrap(), k);
    }

    #[test]
    fn folded_pair_is_harmonic() {
        let m = folded_pair();
        let cert = m.validate().unwrap();
        assert_eq!(cert.skeleton.degree, 2);
        assert_eq!(m.degree().unwrap(), 2);
        assert!(cert.complete_fibers[&v("x")].contains(&p("f")));
        assert_eq!(m.marked_difference(&v("x")).unwrap(), m.expected_marked_difference(&v("x")));
    }

    #[test]
    fn pullback_of_points() {
        let m = folded_pair();
        let d = ComplexDivisor {
            graphical: Divisor::zero(),
            per_curve: BTreeMap::from([(v("o"), CurveDivisor::explicit(Divisor::point(p("f"), 1)))]),
        };
        let pulled = m.pullback(&d).unwrap();
        assert_eq!(pulled.curve_part(&v("x")).points, Divisor::point(p("e"), 2));
        assert_eq!(pulled.degree(), 2);
    }

    #[test]
    fn unramified_fiber_pullback() {
        let cover = CurveCover::new(2).with_point("x1", "y", 1).with_point("x2", "y", 1);
        let d = cover.pullback_point(&v("v"), &p("y")).unwrap();
        assert_eq!(d, [(p("x1"), 1), (p("x2"), 1)].into_iter().collect());
        let partial = CurveCover::new(2).with_point("x1", "y", 1);
        assert!(matches!(partial.pullback_point(&v("v"), &p("y")), Err(Error::UndeclaredFiber { .. })));
    }

    #[test]
    fn wrong_cover_degree() {
        let m = folded_pair();
        let mut covers = m.covers().clone();
        covers.insert(v("x"), CurveCover::new(1).with_point("e", "f", 1));
        let bad = ComplexMorphism::new(m.source().clone(), m.target().clone(), m.skeleton().map().clone(), covers)
            .unwrap();
        assert_eq!(bad.validate().unwrap_err().condition, ComplexCondition::CoverDegree);
    }

    #[test]
    fn wrong_ramification() {
        let m = folded_pair();
        let mut covers = m.covers().clone();
        covers.insert(v("y"), CurveCover::new(2).with_point("e", "f", 1));
        let bad = ComplexMorphism::new(m.source().clone(), m.target().clone(), m.skeleton().map().clone(), covers)
            .unwrap();
        assert_eq!(bad.validate().unwrap_err().condition, ComplexCondition::Ramification);
    }

    #[test]
    fn interior_points_do_not_pull_back() {
        let m = folded_pair();
        let d = ComplexDivisor {
            graphical: Divisor::point(GammaPoint::Interior { edge: "f".into(), offset: Q::new(1, 2) }, 1),
            per_curve: BTreeMap::new(),
        };
        assert!(matches!(m.pullback(&d), Err(Error::UnsupportedPoint(_))));
    }
}
