//! Ramification divisors, Riemann–Hurwitz checks and the second main theorem.
//!
//! All per-vertex quantities live on the loopless working source of the
//! morphism; for finite morphisms with loops this includes loop midpoints.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::complex::ComplexMorphism;
use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::graph::{PointId, VertexId};
use crate::morphism::{pullback_with, Category, Certificate, Morphism};
use crate::scalar::{as_string, Scalar};

/// Largest target for which [`smt_all_subsets`] enumerates every subset.
pub const MAX_SUBSET_TARGETS: usize = 16;

struct VertexData {
    m: i64,
    vertical: i64,
    weight: i64,
    target_weight: i64,
    curve_genus: i64,
    target_curve_genus: i64,
    valency: i64,
    target_valency: i64,
    excess: i64,
}

fn vertex_data<M: Morphism + ?Sized>(m: &M, cert: &Certificate) -> BTreeMap<VertexId, VertexData> {
    let map = m.map().working();
    let (src, tgt) = (map.source(), map.target());
    src.vertices()
        .map(|v| {
            let image = &map.vertex_map()[v];
            let data = VertexData {
                m: cert.multiplicity(v) as i64,
                vertical: cert.vertical(v) as i64,
                weight: m.source_weight(v) as i64,
                target_weight: m.target_weight(image) as i64,
                curve_genus: m.source_curve_genus(v) as i64,
                target_curve_genus: m.target_curve_genus(image) as i64,
                valency: src.valency_unchecked(v) as i64,
                target_valency: tgt.valency_unchecked(image) as i64,
                excess: src.incident_edges(v).map(|e| m.edge_multiplicity(e) as i64 - 1).sum(),
            };
            (v.clone(), data)
        })
        .collect()
}

fn ramification_at(category: Category, d: &VertexData) -> i64 {
    match category {
        Category::Finite => 2 * (d.m - 1) + d.vertical,
        Category::Weighted | Category::Metric | Category::WeightedMetric => {
            2 * (d.m - 1 + d.weight - d.m * d.target_weight) - d.excess
        }
        Category::Complex => {
            2 * (d.m - 1 + d.curve_genus - d.m * d.target_curve_genus)
                + (d.valency - d.m * d.target_valency)
                + 2 * (d.weight - d.target_weight * d.m)
        }
    }
}

fn ramification_with<M: Morphism + ?Sized>(m: &M, cert: &Certificate) -> Divisor<VertexId> {
    vertex_data(m, cert)
        .iter()
        .map(|(v, d)| (v.clone(), ramification_at(m.category(), d)))
        .collect()
}

/// The ramification divisor in the morphism's category, on the working source.
///
/// For complexes this is the Gamma-part; the curve parts are reported by
/// [`check_rh_complex`].
pub fn ramification_divisor<M: Morphism + ?Sized>(m: &M) -> Result<Divisor<VertexId>> {
    let cert = m.certificate()?;
    Ok(ramification_with(m, &cert))
}

/// How much of the curve-level identity could be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationLevel {
    /// Only degrees; no curve had explicit data.
    Degree,
    /// Supports on some curves, degrees on the rest.
    Partial,
    /// Supports on every curve.
    Support,
}

/// The part of the ramification divisor on one curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurvePart {
    /// `deg(K_v + A_v) - deg(phi_v) deg(K_{v'} + A_{v'})`.
    pub degree: i64,
    /// `K_v + A_v - phi_v^* K_{v'} - phi_v^* A_{v'}` when every piece is explicit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<Divisor<PointId>>,
    /// Whether `A_v - phi_v^* A_{v'}` equals `sum (1 - U(e)) red_v(e)`, when the
    /// fibers over marked points are declared.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marked_points_agree: Option<bool>,
    /// Gamma-part coefficient minus `degree + 2(w - w' M)`.
    pub gamma_residual: i64,
}

impl CurvePart {
    pub fn is_consistent(&self) -> bool {
        self.gamma_residual == 0
            && self.marked_points_agree != Some(false)
            && self.support.as_ref().is_none_or(|s| s.degree() == self.degree)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurveRamification {
    pub level: VerificationLevel,
    pub vertices: BTreeMap<VertexId, CurvePart>,
}

/// Outcome of a Riemann–Hurwitz check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RhReport {
    pub category: Category,
    pub degree: u64,
    pub source_genus: u64,
    pub target_genus: u64,
    pub ramification: Divisor<VertexId>,
    /// `K(v) - (phi^* K')(v) - R(v)` at every working source vertex.
    pub residuals: BTreeMap<VertexId, i64>,
    /// `2g - 2`.
    pub lhs: i64,
    /// `deg(phi)(2g' - 2) + deg(R)`.
    pub rhs: i64,
    /// For nonconstant finite morphisms: `2g - 2 >= deg(phi)(2g' - 2)` and `g >= g'`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonconstant_bounds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curves: Option<CurveRamification>,
    pub holds: bool,
}

impl RhReport {
    fn settle(&mut self) {
        self.holds = self.residuals.values().all(|&r| r == 0)
            && self.lhs == self.rhs
            && self.nonconstant_bounds != Some(false)
            && self
                .curves
                .as_ref()
                .is_none_or(|c| c.vertices.values().all(CurvePart::is_consistent));
    }
}

/// Checks `K = phi^* K' + R` vertex by vertex and the genus identity.
///
/// `K` and `K'` come from the category's own canonical divisors while `R`
/// comes from the category's ramification formula, so a zero residual is a
/// real statement about the morphism.
pub fn check_rh<M: Morphism + ?Sized>(m: &M) -> Result<RhReport> {
    let cert = m.certificate()?;
    let working = m.map().working();
    let k = m.source_canonical();
    let pulled = pullback_with(working, &cert, &m.target_canonical())?;
    let ramification = ramification_with(m, &cert);
    let residuals = working
        .source()
        .vertices()
        .map(|v| (v.clone(), k.get(v) - pulled.get(v) - ramification.get(v)))
        .collect();
    let (g, gp, deg) = (m.source_genus(), m.target_genus(), cert.degree);
    let lhs = 2 * g as i64 - 2;
    let rhs = deg as i64 * (2 * gp as i64 - 2) + ramification.degree();
    let nonconstant_bounds = (m.category() == Category::Finite && deg >= 1)
        .then(|| lhs >= deg as i64 * (2 * gp as i64 - 2) && g >= gp);
    let mut report = RhReport {
        category: m.category(),
        degree: deg,
        source_genus: g,
        target_genus: gp,
        ramification,
        residuals,
        lhs,
        rhs,
        nonconstant_bounds,
        curves: None,
        holds: false,
    };
    report.settle();
    Ok(report)
}

/// [`check_rh`] plus the curve parts of the ramification divisor.
pub fn check_rh_complex<S: Scalar>(m: &ComplexMorphism<S>) -> Result<RhReport> {
    let mut report = check_rh(m)?;
    let cert = m.certificate()?;
    let map = m.skeleton().map();
    let mut vertices = BTreeMap::new();
    for v in m.source().graph().vertices() {
        let image = &map.vertex_map()[v];
        let here = m.source().curve(v)?;
        let there = m.target().curve(image)?;
        let cover_degree = m.covers().get(v).map_or(0, |c| c.degree as i64);
        let marked = m.source().marked_divisor(v).degree();
        let marked_image = m.target().marked_divisor(image).degree();
        let degree = here.canonical_degree() + marked - cover_degree * (there.canonical_degree() + marked_image);
        let marked_difference = m.marked_difference(v).ok();
        let marked_points_agree = marked_difference.as_ref().map(|d| *d == m.expected_marked_difference(v));
        let support = match (m.canonical_difference(v), &marked_difference) {
            (Some(k), Some(a)) => Some(&k + a),
            _ => None,
        };
        let weight_term = 2 * (m.source_weight(v) as i64 - m.target_weight(image) as i64 * cert.multiplicity(v) as i64);
        let gamma_residual = report.ramification.get(v) - degree - weight_term;
        vertices.insert(v.clone(), CurvePart { degree, support, marked_points_agree, gamma_residual });
    }
    let explicit = vertices.values().filter(|p| p.support.is_some()).count();
    let level = match explicit {
        0 => VerificationLevel::Degree,
        n if n == vertices.len() => VerificationLevel::Support,
        _ => VerificationLevel::Partial,
    };
    report.curves = Some(CurveRamification { level, vertices });
    report.settle();
    Ok(report)
}

/// Aggregate correction terms of a second-main-theorem instance. Each
/// category uses only some of them; the rest must be zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corrections {
    /// `sum (w(v) - M(v) w'(v'))`.
    pub weight: Rational64,
    /// `sum (g_v - M(v) g_{v'})`.
    pub curve_genus: Rational64,
    /// `1/2 sum V(v)`.
    pub half_vertical: Rational64,
    /// `1/2 sum_v sum_{e at v} (r(e) - 1)`, or the same with slopes.
    pub half_excess: Rational64,
    /// `1/2 sum (val(v) - M(v) val(v'))`.
    pub half_valence: Rational64,
}

fn term_names(category: Category) -> &'static [(&'static str, fn(&Corrections) -> Rational64)] {
    const WEIGHT: (&str, fn(&Corrections) -> Rational64) = ("weight_correction", |c| c.weight);
    match category {
        Category::Finite => &[("half_vertical_sum", |c| c.half_vertical)],
        Category::Weighted => &[WEIGHT, ("half_index_excess", |c| c.half_excess)],
        Category::Metric => &[("half_slope_excess", |c| c.half_excess)],
        Category::WeightedMetric => &[WEIGHT, ("half_slope_excess", |c| c.half_excess)],
        Category::Complex => &[
            ("curve_genus_correction", |c| c.curve_genus),
            WEIGHT,
            ("half_valence_defect", |c| c.half_valence),
        ],
    }
}

fn serialize_terms<Z: Serializer>(terms: &BTreeMap<String, Rational64>, out: Z) -> Result<Z::Ok, Z::Error> {
    let printed: BTreeMap<&str, String> = terms.iter().map(|(k, v)| (k.as_str(), v.to_string())).collect();
    printed.serialize(out)
}

/// `(q + g' - 1) deg` against the category's right-hand side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmtArithmetic {
    pub category: Category,
    pub q: u64,
    /// Every input that enters the right-hand side, by name.
    #[serde(serialize_with = "serialize_terms")]
    pub terms: BTreeMap<String, Rational64>,
    #[serde(with = "as_string")]
    pub lhs: Rational64,
    #[serde(with = "as_string")]
    pub rhs: Rational64,
    /// `rhs - lhs`.
    #[serde(with = "as_string")]
    pub defect: Rational64,
    pub holds: bool,
}

/// Evaluates the second main theorem from aggregate quantities:
/// `lhs = (q + g' - 1) deg` and
/// `rhs = g - 1 + n - weight - curve_genus - half_vertical + half_excess - half_valence`,
/// keeping only the terms the category's inequality contains.
pub fn smt_arithmetic(
    category: Category,
    q: u64,
    g: u64,
    g_prime: u64,
    degree: u64,
    preimage_vertices: u64,
    corrections: &Corrections,
) -> Result<SmtArithmetic> {
    let used = term_names(category);
    let fields: [(&'static str, Rational64, bool); 5] = [
        ("weight_correction", corrections.weight, used.iter().any(|(n, _)| *n == "weight_correction")),
        ("curve_genus_correction", corrections.curve_genus, category == Category::Complex),
        ("half_vertical_sum", corrections.half_vertical, category == Category::Finite),
        ("half_excess", corrections.half_excess, used.iter().any(|(n, _)| n.ends_with("_excess"))),
        ("half_valence_defect", corrections.half_valence, category == Category::Complex),
    ];
    for (term, value, applies) in fields {
        if !applies && !value.is_zero() {
            return Err(Error::InapplicableTerm { category: category.to_string(), term });
        }
    }
    let int = |n: u64| Rational64::from_integer(n as i64);
    let mut terms = BTreeMap::from([
        ("g".to_string(), int(g)),
        ("g_prime".to_string(), int(g_prime)),
        ("degree".to_string(), int(degree)),
        ("preimage_vertices".to_string(), int(preimage_vertices)),
    ]);
    for (name, get) in used {
        terms.insert(name.to_string(), get(corrections));
    }
    let lhs = (int(q) + int(g_prime) - int(1)) * int(degree);
    let rhs = int(g) - int(1) + int(preimage_vertices) - corrections.weight - corrections.curve_genus
        - corrections.half_vertical
        + corrections.half_excess
        - corrections.half_valence;
    let defect = rhs - lhs;
    Ok(SmtArithmetic { category, q, terms, lhs, rhs, defect, holds: !defect.is_negative() })
}

/// A second-main-theorem instance evaluated on an actual morphism.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmtReport {
    pub targets: Vec<VertexId>,
    #[serde(flatten)]
    pub arithmetic: SmtArithmetic,
    /// `r(E) = sum_{v in E} (M(v) - 1)`.
    pub r_e: i64,
    /// `r = sum_v (M(v) - 1)`.
    pub r_total: i64,
    /// `r(E) = q deg - |E|`.
    pub r_identity: bool,
    /// `r(E) <= r`.
    pub r_bound: bool,
    /// `defect = r - r(E)`.
    pub slack_matches: bool,
    /// `1/2 sum_{v not in E} R(v)`: the slack when the correction sums run
    /// over `E` only.
    #[serde(with = "as_string")]
    pub local_defect: Rational64,
    /// `deg = 0`.
    pub constant: bool,
    /// `M(v) >= 1` everywhere.
    pub nondegenerate: bool,
}

impl SmtReport {
    pub fn defect(&self) -> Rational64 {
        self.arithmetic.defect
    }

    pub fn holds(&self) -> bool {
        self.arithmetic.holds
    }
}

fn check_targets(working_target: &crate::graph::Multigraph, targets: &[VertexId]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::NoTargets);
    }
    let mut seen = BTreeSet::new();
    for t in targets {
        if !working_target.has_vertex(t) {
            return Err(Error::UnknownTarget(t.clone()));
        }
        if !seen.insert(t) {
            return Err(Error::DuplicateTarget(t.clone()));
        }
    }
    Ok(())
}

/// The correction sums over every working source vertex.
pub fn corrections<M: Morphism + ?Sized>(m: &M) -> Result<Corrections> {
    let cert = m.certificate()?;
    Ok(corrections_with(m, &vertex_data(m, &cert)))
}

fn corrections_with<M: Morphism + ?Sized>(m: &M, data: &BTreeMap<VertexId, VertexData>) -> Corrections {
    let half = |n: i64| Rational64::new(n, 2);
    let sum = |f: &dyn Fn(&VertexData) -> i64| data.values().map(f).sum::<i64>();
    let category = m.category();
    let mut c = Corrections::default();
    match category {
        Category::Finite => c.half_vertical = half(sum(&|d| d.vertical)),
        Category::Weighted | Category::Metric | Category::WeightedMetric => {
            c.half_excess = half(sum(&|d| d.excess));
        }
        Category::Complex => {
            c.curve_genus = Rational64::from_integer(sum(&|d| d.curve_genus - d.m * d.target_curve_genus));
            c.half_valence = half(sum(&|d| d.valency - d.m * d.target_valency));
        }
    }
    if matches!(category, Category::Weighted | Category::WeightedMetric | Category::Complex) {
        c.weight = Rational64::from_integer(sum(&|d| d.weight - d.m * d.target_weight));
    }
    c
}

fn smt_with<M: Morphism + ?Sized>(
    m: &M,
    cert: &Certificate,
    data: &BTreeMap<VertexId, VertexData>,
    base: &Corrections,
    targets: &[VertexId],
) -> Result<SmtReport> {
    let working = m.map().working();
    check_targets(working.target(), targets)?;
    let chosen: BTreeSet<&VertexId> = targets.iter().collect();
    let in_e = |v: &VertexId| chosen.contains(&working.vertex_map()[v]);
    let n = data.keys().filter(|v| in_e(v)).count() as i64;
    let q = targets.len() as u64;
    let arithmetic =
        smt_arithmetic(m.category(), q, m.source_genus(), m.target_genus(), cert.degree, n as u64, base)?;
    let r_e: i64 = data.iter().filter(|(v, _)| in_e(v)).map(|(_, d)| d.m - 1).sum();
    let r_total: i64 = data.values().map(|d| d.m - 1).sum();
    let outside: i64 = data.iter().filter(|(v, _)| !in_e(v)).map(|(_, d)| ramification_at(m.category(), d)).sum();
    Ok(SmtReport {
        targets: targets.to_vec(),
        r_identity: r_e == q as i64 * cert.degree as i64 - n,
        r_bound: r_e <= r_total,
        slack_matches: arithmetic.defect == Rational64::from_integer(r_total - r_e),
        arithmetic,
        r_e,
        r_total,
        local_defect: Rational64::new(outside, 2),
        constant: cert.degree == 0,
        nondegenerate: cert.is_nondegenerate(),
    })
}

/// Evaluates the second main theorem for the given distinct target vertices.
pub fn smt_report<M: Morphism + ?Sized>(m: &M, targets: &[VertexId]) -> Result<SmtReport> {
    let cert = m.certificate()?;
    let data = vertex_data(m, &cert);
    let base = corrections_with(m, &data);
    smt_with(m, &cert, &data, &base, targets)
}

/// Reports for every nonempty subset of target vertices, in order of the
/// subset's bitmask over the sorted vertex list.
pub fn smt_all_subsets<M: Morphism + ?Sized>(m: &M) -> Result<Vec<SmtReport>> {
    let cert = m.certificate()?;
    let data = vertex_data(m, &cert);
    let base = corrections_with(m, &data);
    let vertices: Vec<VertexId> = m.map().working().target().vertices().cloned().collect();
    if vertices.len() > MAX_SUBSET_TARGETS {
        return Err(Error::TooManyTargets(vertices.len()));
    }
    (1u32..1 << vertices.len())
        .map(|mask| {
            let targets: Vec<VertexId> =
                vertices.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| v.clone()).collect();
            smt_with(m, &cert, &data, &base, &targets)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::samples::folded_pair;
    use crate::graph::samples::*;
    use crate::morphism::samples::*;
    use crate::morphism::GraphMorphism;

    fn v(s: &str) -> VertexId {
        s.into()
    }

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn d(entries: &[(&str, i64)]) -> Divisor<VertexId> {
        entries.iter().map(|(p, n)| (v(p), *n)).collect()
    }

    #[test]
    fn identity_has_no_ramification() {
        let id = GraphMorphism::identity(&bowtie());
        assert!(ramification_divisor(&id).unwrap().is_zero());
        let rep = check_rh(&id).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.nonconstant_bounds, Some(true));
    }

    #[test]
    fn bowtie_collapse_rh() {
        let m = bowtie_collapse();
        assert_eq!(ramification_divisor(&m).unwrap(), d(&[("p", 2)]));
        let rep = check_rh(&m).unwrap();
        assert!(rep.holds);
        assert_eq!((rep.lhs, rep.rhs), (2, 2));
    }

    #[test]
    fn hexagon_cover_rh() {
        let rep = check_rh(&hexagon_cover()).unwrap();
        assert!(rep.ramification.is_zero());
        assert_eq!((rep.lhs, rep.rhs, rep.degree), (0, 0, 2));
        assert!(rep.holds);
    }

    #[test]
    fn segment_stretch_rh() {
        let rep = check_rh(&segment_stretch()).unwrap();
        assert_eq!(rep.ramification, d(&[("a", 2), ("b", 2)]));
        assert_eq!((rep.lhs, rep.rhs), (-2, -2));
        assert!(rep.holds);
    }

    #[test]
    fn non_harmonic_map_is_refused() {
        let m = GraphMorphism::build(path(2), path(3), &[("v0", "v0"), ("v1", "v1")], &[("e1", "e1")]).unwrap();
        assert!(matches!(check_rh(&m), Err(Error::NotHarmonicAt(_))));
    }

    #[test]
    fn smt_examples_on_fixtures() {
        let m = bowtie_collapse();
        let rep = smt_report(&m, &[v("c"), v("d"), v("p")]).unwrap();
        assert_eq!((rep.arithmetic.lhs, rep.arithmetic.rhs), (r(3, 1), r(3, 1)));
        assert!(rep.r_identity && rep.slack_matches);

        let id = GraphMorphism::identity(&triangle());
        let rep = smt_report(&id, &[v("a")]).unwrap();
        assert_eq!(rep.arithmetic.lhs, rep.arithmetic.rhs);

        let cover = hexagon_cover();
        let rep = smt_report(&cover, &[v("a"), v("b"), v("c")]).unwrap();
        assert_eq!((rep.arithmetic.lhs, rep.arithmetic.rhs), (r(6, 1), r(6, 1)));
    }

    #[test]
    fn degenerate_subsets_can_go_negative() {
        let m = bowtie_collapse();
        let rep = smt_report(&m, &[v("c")]).unwrap();
        assert!(!rep.nondegenerate);
        assert_eq!(rep.defect(), r(-2, 1));
        assert!(!rep.r_bound);
        assert!(rep.slack_matches);
        assert!(!rep.local_defect.is_negative());
    }

    #[test]
    fn target_validation() {
        let m = bowtie_collapse();
        assert_eq!(smt_report(&m, &[]).unwrap_err(), Error::NoTargets);
        assert_eq!(smt_report(&m, &[v("a")]).unwrap_err(), Error::UnknownTarget(v("a")));
        assert_eq!(smt_report(&m, &[v("c"), v("c")]).unwrap_err(), Error::DuplicateTarget(v("c")));
    }

    #[test]
    fn all_subsets_count() {
        let reps = smt_all_subsets(&hexagon_cover()).unwrap();
        assert_eq!(reps.len(), 7);
        assert!(reps.iter().all(|r| r.holds() && r.r_identity));
    }

    #[test]
    fn arithmetic_rejects_foreign_terms() {
        let c = Corrections { half_vertical: r(1, 2), ..Default::default() };
        assert!(matches!(
            smt_arithmetic(Category::Metric, 1, 1, 0, 1, 1, &c),
            Err(Error::InapplicableTerm { .. })
        ));
        let half = Corrections { half_excess: r(1, 2), ..Default::default() };
        let rep = smt_arithmetic(Category::Weighted, 3, 5, 0, 3, 3, &half).unwrap();
        assert_eq!(rep.rhs, r(15, 2));
        assert_eq!(rep.terms["half_index_excess"], r(1, 2));
    }

    #[test]
    fn complex_rh() {
        let m = folded_pair();
        let rep = check_rh_complex(&m).unwrap();
        assert!(rep.holds, "{rep:?}");
        let curves = rep.curves.unwrap();
        assert_eq!(curves.level, VerificationLevel::Degree);
        assert_eq!(curves.vertices[&v("x")].marked_points_agree, Some(true));
        // 0 + 1 - 2 (-2 + 1)
        assert_eq!(curves.vertices[&v("x")].degree, 3);
    }

    #[test]
    fn complex_smt() {
        let m = folded_pair();
        for rep in smt_all_subsets(&m).unwrap() {
            assert!(rep.holds() && rep.r_identity && rep.slack_matches);
        }
    }
}
