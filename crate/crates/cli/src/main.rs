use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use rhsmt::format::{self, AnyDivisor, FormatError};
use rhsmt::generators::{random_instance, GenSpec};
use rhsmt::theorems::{smt_all_subsets, smt_report};
use rhsmt::{Category, Document, Instance, Rational, VertexId};

/// Exit code for a valid input that violates a checked property.
const VIOLATION: u8 = 2;

#[derive(Parser)]
#[command(name = "rhsmt", version)]
#[command(about = "Check Riemann-Hurwitz formulas and second main theorems for graph morphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an object or morphism document and print its certificate
    Validate {
        file: PathBuf,
        /// For weighted morphisms, also require nonnegative local ramification
        #[arg(long)]
        harmonic: bool,
    },
    /// Print the Riemann-Hurwitz report of a morphism
    Rh { file: PathBuf },
    /// Print second main theorem reports for a set of target vertices
    Smt {
        file: PathBuf,
        /// Comma-separated target vertices
        #[arg(long, value_delimiter = ',', required_unless_present = "all_subsets")]
        targets: Vec<VertexId>,
        /// Report every nonempty subset of target vertices instead
        #[arg(long, conflicts_with = "targets")]
        all_subsets: bool,
    },
    /// Pull a divisor back along a morphism
    Pullback { morphism: PathBuf, divisor: PathBuf },
    /// Print the canonical divisor of an object
    Canonical { file: PathBuf },
    /// Print the generated instance for a category and seed
    Generate {
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Generate instances and check every theorem on them
    Fuzz {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 100)]
        iters: u64,
        /// Skip the second main theorem on instances with a vertex of multiplicity 0
        #[arg(long)]
        skip_degenerate: bool,
    },
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_category)]
    category: Category,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    max_vertices: usize,
    #[arg(long, default_value_t = 4)]
    max_extra_edges: usize,
    #[arg(long, default_value_t = 3)]
    max_degree: u64,
    #[arg(long, default_value_t = 2)]
    max_weight: u64,
    #[arg(long, default_value_t = 3)]
    max_genus: u64,
    #[arg(long, default_value_t = 4)]
    max_length: u64,
    /// Allow pseudo-harmonic weighted instances
    #[arg(long)]
    pseudo: bool,
}

impl GenArgs {
    fn spec(&self) -> GenSpec {
        GenSpec {
            category: self.category,
            max_vertices: self.max_vertices,
            max_extra_edges: self.max_extra_edges,
            max_degree: self.max_degree,
            max_weight: self.max_weight,
            max_genus: self.max_genus,
            max_length: self.max_length,
            harmonic: !self.pseudo,
            seed: self.seed,
        }
    }
}

fn parse_category(s: &str) -> Result<Category, String> {
    s.parse::<Category>().map_err(|e| e.to_string())
}

/// Failure of a subcommand: bad input (exit 1) or a violated property (exit 2).
enum Failure {
    Input(String),
    Violation(String),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Input(json!({ "error": e.code(), "message": e.to_string() }).to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn load(path: &Path) -> Result<Document, Failure> {
    Ok(format::parse_file(path)?)
}

fn load_morphism(path: &Path) -> Result<Instance, Failure> {
    match load(path)? {
        Document::Morphism(m) => Ok(m),
        other => Err(Failure::Input(format!("{}: expected a morphism document, found {}", path.display(), other.kind()))),
    }
}

fn report<T: Serialize>(kind: &str, payload: &T) {
    let doc = json!({ "schema_version": format::SCHEMA_VERSION, "kind": kind, "payload": payload });
    print!("{}", format::to_text(&doc));
}

fn violation(e: impl std::fmt::Display) -> Failure {
    Failure::Violation(e.to_string())
}

/// A divisor naming points the morphism does not know is bad input.
fn pullback_failure(e: rhsmt::Error) -> Failure {
    match e {
        rhsmt::Error::UnknownVertex(_) | rhsmt::Error::UnknownEdge(_) => Failure::Input(e.to_string()),
        e => violation(e),
    }
}

fn validate(file: &Path, harmonic: bool) -> Outcome {
    let doc = match format::parse_file::<Rational>(file) {
        Err(e @ FormatError::Invariant { .. }) => {
            report("certificate", &json!({ "valid": false, "error": e.code(), "message": e.to_string() }));
            return Ok(false);
        }
        other => other?,
    };
    let body = match &doc {
        Document::Object(o) => {
            json!({ "valid": true, "object": o.kind(), "genus": o.genus().map_err(violation)? })
        }
        Document::Divisor(d) => json!({ "valid": true, "degree": d.degree() }),
        Document::Morphism(m) => match m.validate(harmonic) {
            Ok(()) => {
                let cert = m.morphism().certificate().map_err(violation)?;
                json!({
                    "valid": true,
                    "category": m.category(),
                    "degree": cert.degree,
                    "horizontal_multiplicity": cert.multiplicity,
                    "vertical_multiplicity": cert.vertical,
                })
            }
            Err(e) => json!({ "valid": false, "category": m.category(), "message": e.to_string() }),
        },
    };
    let valid = body["valid"] == Value::Bool(true);
    report("certificate", &body);
    Ok(valid)
}

fn rh(file: &Path) -> Outcome {
    let m = load_morphism(file)?;
    let rep = m.check_rh().map_err(violation)?;
    report("rh_report", &rep);
    Ok(rep.holds)
}

fn smt(file: &Path, targets: &[VertexId], all: bool) -> Outcome {
    let m = load_morphism(file)?;
    if all {
        let reps = smt_all_subsets(m.morphism()).map_err(violation)?;
        let holds = reps.iter().all(|r| r.holds());
        report("smt_reports", &reps);
        return Ok(holds);
    }
    let rep = smt_report(m.morphism(), targets).map_err(|e| match e {
        rhsmt::Error::UnknownTarget(_) | rhsmt::Error::DuplicateTarget(_) | rhsmt::Error::NoTargets => {
            Failure::Input(e.to_string())
        }
        e => violation(e),
    })?;
    report("smt_report", &rep);
    Ok(rep.holds())
}

fn pullback(morphism: &Path, divisor: &Path) -> Outcome {
    let m = load_morphism(morphism)?;
    let d = match load(divisor)? {
        Document::Divisor(d) => d,
        other => return Err(Failure::Input(format!("expected a divisor document, found {}", other.kind()))),
    };
    let out = match (&m, d) {
        (Instance::Complex(c), AnyDivisor::Complex(d)) => AnyDivisor::Complex(c.pullback(&d).map_err(pullback_failure)?),
        (_, AnyDivisor::Vertex(d)) => AnyDivisor::Vertex(m.morphism().pullback(&d).map_err(pullback_failure)?),
        (_, AnyDivisor::Complex(_)) => {
            return Err(Failure::Input("complex divisors can only be pulled back along complex morphisms".into()))
        }
    };
    print!("{}", format::serialize(&Document::Divisor(out)));
    Ok(true)
}

fn canonical(file: &Path) -> Outcome {
    let k = match load(file)? {
        Document::Object(o) => o.canonical_divisor().map_err(violation)?,
        other => return Err(Failure::Input(format!("expected an object document, found {}", other.kind()))),
    };
    print!("{}", format::serialize(&Document::Divisor(k)));
    Ok(true)
}

fn generate(gen: &GenArgs) -> Outcome {
    let m = random_instance::<Rational>(&gen.spec()).map_err(|e| Failure::Input(e.to_string()))?;
    print!("{}", format::serialize(&Document::Morphism(m)));
    Ok(true)
}

fn names(vs: &[VertexId]) -> String {
    vs.iter().map(VertexId::as_str).collect::<Vec<_>>().join(",")
}

/// Why one generated instance failed, if it did.
fn check_instance(m: &Instance, harmonic: bool, skip_degenerate: bool) -> Result<(), String> {
    m.validate(harmonic).map_err(|e| format!("validator: {e}"))?;
    let rh = m.check_rh().map_err(|e| e.to_string())?;
    if !rh.holds {
        return Err(format!("Riemann-Hurwitz fails: lhs {} rhs {} residuals {:?}", rh.lhs, rh.rhs, rh.residuals));
    }
    let cert = m.morphism().certificate().map_err(|e| e.to_string())?;
    if skip_degenerate && !cert.is_nondegenerate() {
        return Ok(());
    }
    for r in smt_all_subsets(m.morphism()).map_err(|e| e.to_string())? {
        if !r.r_identity {
            return Err(format!("r(E) identity fails for targets {}", names(&r.targets)));
        }
        if !r.holds() {
            return Err(format!(
                "second main theorem fails for targets {}: lhs {} rhs {}",
                names(&r.targets),
                r.arithmetic.lhs,
                r.arithmetic.rhs
            ));
        }
    }
    Ok(())
}

fn fuzz(gen: &GenArgs, iters: u64, skip_degenerate: bool) -> Outcome {
    let base = gen.spec();
    for i in 0..iters {
        let spec = base.with_seed(base.seed.wrapping_add(i));
        let m = random_instance::<Rational>(&spec).map_err(|e| Failure::Input(e.to_string()))?;
        if let Err(reason) = check_instance(&m, spec.harmonic, skip_degenerate) {
            report(
                "fuzz_failure",
                &json!({ "category": spec.category, "seed": spec.seed, "iteration": i, "reason": reason }),
            );
            return Ok(false);
        }
    }
    report("fuzz_summary", &json!({ "category": base.category, "seed": base.seed, "iterations": iters, "passed": true }));
    Ok(true)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { file, harmonic } => validate(&file, harmonic),
        Command::Rh { file } => rh(&file),
        Command::Smt { file, targets, all_subsets } => smt(&file, &targets, all_subsets),
        Command::Pullback { morphism, divisor } => pullback(&morphism, &divisor),
        Command::Canonical { file } => canonical(&file),
        Command::Generate { gen } => generate(&gen),
        Command::Fuzz { gen, iters, skip_degenerate } => fuzz(&gen, iters, skip_degenerate),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(VIOLATION),
        Err(Failure::Violation(msg)) => {
            eprintln!("rhsmt: {msg}");
            ExitCode::from(VIOLATION)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("rhsmt: {msg}");
            ExitCode::FAILURE
        }
    }
}
