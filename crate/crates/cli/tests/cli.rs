use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rhsmt")).args(args).current_dir(fixtures()).output().unwrap()
}

fn payload(out: &Output) -> Value {
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema_version"], "1");
    doc["payload"].clone()
}

fn frozen(name: &str) -> Vec<u8> {
    std::fs::read(fixtures().join("expected").join(name)).unwrap()
}

#[test]
fn rh_reports_match_frozen_copies() {
    for name in ["bowtie_collapse", "hexagon_cover", "segment_stretch"] {
        let out = run(&["rh", &format!("{name}.json")]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        assert_eq!(out.stdout, frozen(&format!("{name}.rh.json")), "{name}");
    }
}

#[test]
fn smt_reports_match_frozen_copies() {
    for (name, targets) in [("bowtie_collapse", "c,d,p"), ("hexagon_cover", "a,b,c"), ("segment_stretch", "a',b'")] {
        let out = run(&["smt", &format!("{name}.json"), "--targets", targets]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        assert_eq!(out.stdout, frozen(&format!("{name}.smt.json")), "{name}");
    }
}

#[test]
fn bowtie_single_target_violates_the_stated_inequality() {
    let out = run(&["smt", "bowtie_collapse.json", "--targets", "c"]);
    assert_eq!(out.status.code(), Some(2));
    let p = payload(&out);
    assert_eq!(p["defect"], "-2");
    assert_eq!(p["local_defect"], "1");
    assert_eq!(p["nondegenerate"], false);
}

#[test]
fn all_subsets_enumerates_every_target_set() {
    let out = run(&["smt", "hexagon_cover.json", "--all-subsets"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(payload(&out).as_array().unwrap().len(), 7);
}

#[test]
fn validate_reports_certificates() {
    let out = run(&["validate", "hexagon_cover.json"]);
    assert_eq!(out.status.code(), Some(0));
    let p = payload(&out);
    assert_eq!(p["degree"], 2);
    assert_eq!(p["valid"], true);

    let out = run(&["validate", "theta_wmg.json"]);
    assert_eq!(payload(&out)["genus"], 4);
    assert_eq!(run(&["validate", "weighted_star.json", "--harmonic"]).status.code(), Some(0));
}

#[test]
fn canonical_and_pullback() {
    let p = payload(&run(&["canonical", "pseudo_loop.json"]));
    assert_eq!(p["points"], json!({ "a": -1, "b": 1 }));
    let p = payload(&run(&["canonical", "triangle.json"]));
    assert_eq!(p["points"], json!({}));

    let out = run(&["pullback", "hexagon_cover.json", "point_p.json"]);
    assert_eq!(out.status.code(), Some(1), "p is not a vertex of the triangle");
    let out = run(&["pullback", "bowtie_collapse.json", "point_p.json"]);
    assert_eq!(out.status.code(), Some(0));
    let p = payload(&out);
    let total: i64 = p["points"].as_object().unwrap().values().map(|v| v.as_i64().unwrap()).sum();
    assert_eq!(total, 0);
}

#[test]
fn input_errors_exit_one() {
    let dir = std::env::temp_dir().join(format!("rhsmt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"schema_version\": \"1\",\n").unwrap();
    let out = run(&["rh", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syntax_error"));

    let bridge = dir.join("bridge.json");
    std::fs::write(
        &bridge,
        r#"{"schema_version":"1","kind":"metric_graph","payload":{"vertices":["a","b"],"edges":{"e":["a","b"]},"lengths":{"e":"0"},"pseudo":true}}"#,
    )
    .unwrap();
    let out = run(&["validate", bridge.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(payload(&out)["error"], "invariant_error");

    assert_eq!(run(&["smt", "bowtie_collapse.json", "--targets", "zz"]).status.code(), Some(1));
    assert_eq!(run(&["rh", "triangle.json"]).status.code(), Some(1));
    assert_eq!(run(&["rh", "missing.json"]).status.code(), Some(1));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn generate_is_deterministic_and_parses() {
    for category in ["finite", "weighted", "metric", "weighted_metric", "complex"] {
        let a = run(&["generate", "--category", category, "--seed", "11"]);
        let b = run(&["generate", "--category", category, "--seed", "11"]);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
        let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
        assert_eq!(doc["kind"], "morphism");
        assert_eq!(doc["payload"]["category"], category);
    }
    assert_ne!(
        run(&["generate", "--category", "finite", "--seed", "1"]).stdout,
        run(&["generate", "--category", "finite", "--seed", "2"]).stdout
    );
}

#[test]
fn fuzz_exit_codes() {
    let out = run(&["fuzz", "--category", "finite", "--iters", "50", "--seed", "7", "--skip-degenerate"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(payload(&out)["passed"], true);

    let out = run(&["fuzz", "--category", "finite", "--iters", "50", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(2));
    let p = payload(&out);
    assert!(p["reason"].as_str().unwrap().contains("second main theorem"));
    assert_eq!(run(&["fuzz", "--category", "nope"]).status.code(), Some(2));
}
