use std::path::{Path, PathBuf};

use rhsmt::format::{self, Kind};
use rhsmt::theorems::smt_report;
use rhsmt::{Divisor, Document, Instance, VertexId};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn documents() -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.ends_with("smt_examples.json"))
        .collect();
    out.sort();
    out
}

fn morphism(name: &str) -> Instance {
    match format::parse_file(&dir().join(name)).unwrap() {
        Document::Morphism(m) => m,
        other => panic!("{name} is a {}", other.kind()),
    }
}

fn vid(s: &str) -> VertexId {
    VertexId::new(s)
}

#[test]
fn every_fixture_round_trips() {
    let docs = documents();
    assert!(docs.len() >= 8);
    for path in &docs {
        let first: Document = format::parse_file(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let text = format::serialize(&first);
        let second: Document = format::parse_in(&text, Some(Path::new("."))).unwrap();
        assert_eq!(first, second, "{}", path.display());
        assert_eq!(format::serialize(&second), text);
    }
}

#[test]
fn referenced_target_is_loaded() {
    let Instance::Finite(m) = morphism("hexagon_cover.json") else { panic!() };
    let Document::Object(t) = format::parse_file(&dir().join("triangle.json")).unwrap() else { panic!() };
    assert_eq!(m.target(), t.graph());
}

#[test]
fn bowtie_collapse() {
    let m = morphism("bowtie_collapse.json");
    let rep = m.check_rh().unwrap();
    assert_eq!(rep.degree, 1);
    assert_eq!(rep.ramification, Divisor::point(vid("p"), 2));
    assert_eq!((rep.lhs, rep.rhs), (2, 2));
    let smt = smt_report(m.morphism(), &[vid("c"), vid("d"), vid("p")]).unwrap();
    assert_eq!(smt.arithmetic.lhs, 3.into());
    assert_eq!(smt.arithmetic.rhs, 3.into());
}

#[test]
fn hexagon_cover() {
    let m = morphism("hexagon_cover.json");
    let rep = m.check_rh().unwrap();
    assert_eq!(rep.degree, 2);
    assert!(rep.ramification.is_zero());
    assert_eq!((rep.lhs, rep.rhs), (0, 0));
    let smt = smt_report(m.morphism(), &[vid("a"), vid("b"), vid("c")]).unwrap();
    assert_eq!((smt.arithmetic.lhs, smt.arithmetic.rhs), (6.into(), 6.into()));
}

#[test]
fn segment_stretch() {
    let m = morphism("segment_stretch.json");
    let rep = m.check_rh().unwrap();
    assert_eq!(rep.degree, 3);
    assert_eq!(rep.ramification, Divisor::from_iter([(vid("a"), 2), (vid("b"), 2)]));
    assert_eq!((rep.lhs, rep.rhs), (-2, -2));
}

#[test]
fn weighted_and_complex_fixtures_hold() {
    for name in ["weighted_star.json", "folded_pair.json"] {
        let m = morphism(name);
        m.validate(true).unwrap();
        assert!(m.check_rh().unwrap().holds, "{name}");
    }
}

#[test]
fn object_fixtures() {
    let kinds: Vec<Kind> = documents().iter().map(|p| format::parse_file::<rhsmt::Rational>(p).unwrap().kind()).collect();
    for k in [Kind::Graph, Kind::MetricGraph, Kind::WeightedMetricGraph, Kind::Morphism, Kind::Divisor] {
        assert!(kinds.contains(&k), "{k}");
    }
}
