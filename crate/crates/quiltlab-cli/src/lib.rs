//! Command-line frontend for quiltlab: file I/O, verification suites, JSON reports.
//!
//! Exit codes: 0 success, 1 computational failure (with a witness), 2 malformed input.

pub mod suites;

use clap::{Args, Parser, Subcommand};
use quiltlab::corrlin::{self, CompositionReportJson, CorrespondenceJson};
use quiltlab::grading::{self, GradedJson};
use quiltlab::maslov::{self, PathJson};
use quiltlab::quilt::{self, SequenceJson, TableOracle, ZeroOracle};
use quiltlab::toric;
use quiltlab::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use suites::{SuiteConfig, SCHEMA};

#[derive(Parser, Debug)]
#[command(name = "quiltlab", version, about = "Quilted Floer computations on linear, lattice and toric models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compose two linear correspondences.
    Compose { a: PathBuf, b: PathBuf },
    /// Robbin–Salamon index of a pair of Lagrangian paths.
    Maslov { g0: PathBuf, g1: PathBuf },
    /// Degree of a pair of graded Lagrangians.
    Degree { a: PathBuf, b: PathBuf },
    /// Lattice quilts on tori.
    Quilt {
        #[command(subcommand)]
        command: QuiltCommand,
    },
    /// CP^n computations.
    Toric {
        #[command(subcommand)]
        command: ToricCommand,
    },
    /// Run verification suites.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum QuiltCommand {
    /// Generators with their degrees.
    Generators { sequence: PathBuf },
    /// Degrees by the three formulas.
    Degrees {
        sequence: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compose correspondences j−1 and j.
    Compose {
        sequence: PathBuf,
        #[arg(long)]
        at: usize,
    },
    /// Homology of the quilted complex with a differential oracle.
    Homology {
        sequence: PathBuf,
        /// "zero" or a JSON file of counts {"entries": [{"from", "to", "count"}]}.
        #[arg(long, default_value = "zero")]
        oracle: String,
    },
}

#[derive(Subcommand, Debug)]
enum ToricCommand {
    /// The chain of reductions for the Clifford torus.
    Calc {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// T^{k−1} ∘ Σ_(k..n), and Σ_(2..n) ∘ Σ_1ᵗ when k = 2.
    Compose {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monotonicity constants of CP^n and its reduced spaces.
    Tau {
        #[arg(long)]
        n: usize,
    },
    /// Generators of the perturbed Clifford pair.
    Generators {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite name, or "all".
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long = "n-max")]
    n_max: Option<usize>,
    #[arg(long = "N")]
    modulus: Option<i64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall times in the report.
    #[arg(long)]
    timings: bool,
}

enum Fail {
    Input(String),
    Compute { message: String, output: Option<Value> },
}

impl Fail {
    fn compute(message: impl Into<String>, output: Value) -> Self {
        Fail::Compute { message: message.into(), output: Some(output) }
    }
}

/// Errors raised while computing: incompatible inputs count as malformed, the rest as failures.
fn computed(e: Error) -> Fail {
    match e {
        Error::SpaceMismatch(_) | Error::ModulusMismatch(..) | Error::DimensionMismatch(_) | Error::InvalidModulus(_) => {
            Fail::Input(e.to_string())
        }
        _ => Fail::Compute { message: e.to_string(), output: None },
    }
}

fn input(e: Error) -> Fail {
    Fail::Input(e.to_string())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))
}

fn with_schema<T: Serialize>(body: &T) -> Value {
    let mut v = serde_json::to_value(body).expect("serializable");
    if let Value::Object(m) = &mut v {
        m.insert("schema".into(), json!(SCHEMA));
    }
    v
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let threads = std::env::var("QUILTLAB_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: thread pool: {e}");
            return 2;
        }
    };
    let mut log = Vec::new();
    let result = pool.install(|| dispatch(cli.command, &mut log));
    let _ = err.write_all(&log);
    match result {
        Ok(v) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("serializable"));
            0
        }
        Err(Fail::Input(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Fail::Compute { message, output }) => {
            if let Some(v) = output {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("serializable"));
            }
            let _ = writeln!(err, "failure: {message}");
            1
        }
    }
}

fn dispatch(cmd: Command, err: &mut Vec<u8>) -> Result<Value, Fail> {
    match cmd {
        Command::Compose { a, b } => compose_cmd(&a, &b),
        Command::Maslov { g0, g1 } => maslov_cmd(&g0, &g1),
        Command::Degree { a, b } => degree_cmd(&a, &b),
        Command::Quilt { command } => quilt_cmd(command),
        Command::Toric { command } => toric_cmd(command),
        Command::Verify(args) => verify_cmd(args, err),
    }
}

fn compose_cmd(a: &Path, b: &Path) -> Result<Value, Fail> {
    let ca = read_json::<CorrespondenceJson>(a)?.to_corr().map_err(input)?;
    let cb = read_json::<CorrespondenceJson>(b)?.to_corr().map_err(input)?;
    let r = corrlin::compose(&ca, &cb).map_err(computed)?;
    let embedded = r.transverse && r.kernel.dim() == 0;
    let v = with_schema(&json!({ "embedded": embedded, "report": CompositionReportJson::from_report(&r) }));
    if embedded {
        Ok(v)
    } else {
        Err(Fail::compute(format!("composition is not embedded: kernel dimension {}, defect {}", r.kernel.dim(), r.defect), v))
    }
}

fn maslov_cmd(g0: &Path, g1: &Path) -> Result<Value, Fail> {
    let p0 = read_json::<PathJson>(g0)?.to_path().map_err(input)?;
    let p1 = read_json::<PathJson>(g1)?.to_path().map_err(input)?;
    let crossings = maslov::find_crossings(&p0, &p1).map_err(computed)?;
    let table: Vec<Value> = crossings
        .iter()
        .map(|c| json!({ "s": c.s, "dim": c.dim(), "signature": c.signature, "endpoint": c.endpoint, "regular": c.regular }))
        .collect();
    match maslov::rs_index(&p0, &p1) {
        Ok(idx) => Ok(with_schema(&json!({ "index": maslov::format_half(idx), "crossings": table }))),
        Err(e) => Err(Fail::compute(e.to_string(), with_schema(&json!({ "crossings": table })))),
    }
}

fn degree_cmd(a: &Path, b: &Path) -> Result<Value, Fail> {
    let ga = read_json::<GradedJson>(a)?.to_graded().map_err(input)?;
    let gb = read_json::<GradedJson>(b)?.to_graded().map_err(input)?;
    let d = grading::degree(&ga, &gb).map_err(computed)?;
    Ok(with_schema(&json!({ "degree": d, "N": ga.modulus() })))
}

fn load_sequence(path: &Path) -> Result<quilt::CyclicSequence, Fail> {
    read_json::<SequenceJson>(path)?.to_sequence().map_err(input)
}

fn quilt_cmd(cmd: QuiltCommand) -> Result<Value, Fail> {
    match cmd {
        QuiltCommand::Generators { sequence } => {
            let seq = load_sequence(&sequence)?;
            let g = quilt::intersection_points(&seq).map_err(computed)?;
            Ok(with_schema(&json!({ "N": seq.modulus(), "count": g.len(), "generators": g })))
        }
        QuiltCommand::Degrees { sequence, seed } => {
            let seq = load_sequence(&sequence)?;
            let g = quilt::intersection_points(&seq).map_err(computed)?;
            let mut rows = Vec::new();
            let mut agree = true;
            for x in &g {
                let d = quilt::generator_degree(&seq, x).map_err(computed)?;
                let a = quilt::generator_degree_alt_a(&seq, x, seed).map_err(computed)?;
                let b = quilt::generator_degree_alt_b(&seq, x).map_err(computed)?;
                agree &= d == a && d == b;
                rows.push(json!({ "points": x.points, "definition": d, "alt_a": a, "alt_b": b }));
            }
            let v = with_schema(&json!({ "N": seq.modulus(), "agree": agree, "generators": rows }));
            if agree {
                Ok(v)
            } else {
                Err(Fail::compute("degree formulas disagree", v))
            }
        }
        QuiltCommand::Compose { sequence, at } => {
            let seq = load_sequence(&sequence)?;
            if at == 0 || at >= seq.len() {
                return Err(Fail::Input(format!("--at {at} must lie in 1..{}", seq.len())));
            }
            let c = match quilt::compose_at(&seq, at) {
                Ok(c) => c,
                Err(Error::NotEmbedded(w)) => return Err(Fail::compute(format!("not embedded: {w}"), with_schema(&json!({ "embedded": false, "witness": w })))),
                Err(e) => return Err(computed(e)),
            };
            let (a, b) = c.degree_multisets();
            let ok = c.preserves_degrees() && a == b;
            let v = with_schema(&json!({
                "embedded": true,
                "preserves_degrees": ok,
                "before": c.before,
                "after": c.after,
                "map": c.map,
                "sequence": SequenceJson::from_sequence(&c.sequence),
            }));
            if ok {
                Ok(v)
            } else {
                Err(Fail::compute("composition changes degrees", v))
            }
        }
        QuiltCommand::Homology { sequence, oracle } => {
            let seq = load_sequence(&sequence)?;
            let (g, cx) = if oracle == "zero" {
                quilt::build_complex(&seq, &ZeroOracle)
            } else {
                let table: TableOracle = read_json(Path::new(&oracle))?;
                quilt::build_complex(&seq, &table)
            }
            .map_err(computed)?;
            let h = quilt::homology(&cx).map_err(computed)?;
            Ok(with_schema(&json!({ "N": seq.modulus(), "generators": g.len(), "homology": h, "total_rank": h.total_rank() })))
        }
    }
}

fn toric_cmd(cmd: ToricCommand) -> Result<Value, Fail> {
    match cmd {
        ToricCommand::Calc { n, samples, seed } => {
            if n < 2 {
                return Err(Fail::Input(format!("--n must be at least 2, got {n}")));
            }
            let r = toric::calc_chain(n, samples, seed).map_err(computed)?;
            let v = with_schema(&r);
            if r.consistent {
                Ok(v)
            } else {
                Err(Fail::compute("generator bijection failed", v))
            }
        }
        ToricCommand::Compose { k, n, samples, seed } => {
            let s = toric::sigma(k, n).map_err(input)?;
            let mut rows = Vec::new();
            let mut ok = true;
            let c = toric::compose_toric(&toric::clifford_in(s.source), &s, samples, seed).map_err(computed)?;
            let same = c.composed.same_set(&toric::clifford(n)).map_err(computed)?;
            ok &= c.embedded && same;
            rows.push(json!({ "name": format!("T^{} ∘ Σ_({k}..{n})", k - 1), "expected": "T^n", "identified": same, "result": c }));
            if k == 2 {
                let s1 = toric::sigma_j(1, n).map_err(input)?;
                let c = toric::compose_toric(&s, &s1.transpose(), samples, seed.wrapping_add(1)).map_err(computed)?;
                let product = toric::split_product(&toric::clifford_in(s.source), &toric::clifford_in(s1.source)).map_err(computed)?;
                let same = c.composed.same_set(&product).map_err(computed)?;
                ok &= c.embedded && same;
                rows.push(json!({ "name": format!("Σ_(2..{n}) ∘ Σ_1ᵗ"), "expected": "T^1 × T^{n-1}", "identified": same, "result": c }));
            }
            let v = with_schema(&json!({ "k": k, "n": n, "compositions": rows }));
            if ok {
                Ok(v)
            } else {
                Err(Fail::compute("composition is not embedded or not identified", v))
            }
        }
        ToricCommand::Tau { n } => Ok(with_schema(&toric::tau_report(n).map_err(input)?)),
        ToricCommand::Generators { n } => {
            let g = toric::perturbed_generators(n, None).map_err(computed)?;
            Ok(with_schema(&json!({ "n": n, "count": g.len(), "generators": g })))
        }
    }
}

fn verify_cmd(args: VerifyArgs, err: &mut Vec<u8>) -> Result<Value, Fail> {
    if let Some(m) = args.modulus {
        if m <= 0 || m % 2 != 0 {
            return Err(Fail::Input(format!("--N {m} must be even and positive")));
        }
    }
    let cfg = SuiteConfig { instances: args.instances, n_max: args.n_max, modulus: args.modulus, tol: args.tol };
    let (value, pass) = if args.suite == "all" {
        let r = if args.instances.is_some() || args.n_max.is_some() || args.modulus.is_some() || args.tol.is_some() {
            let suites: Vec<_> = suites::SUITES
                .iter()
                .map(|s| suites::run_suite(s, suites::suite_seed(args.seed, s), &cfg).expect("known suite"))
                .collect();
            suites::AggregateReport { schema: SCHEMA.into(), seed: args.seed, pass: suites.iter().all(|s| s.pass()), suites }
        } else {
            suites::verify_all(args.seed)
        };
        for s in &r.suites {
            let _ = writeln!(err, "{:<13} {}/{} {:.2}s", s.suite, s.passed, s.instances, s.wall_time_s.unwrap_or(0.0));
        }
        let r = if args.timings { r } else { r.without_timing() };
        (serde_json::to_value(&r).expect("serializable"), r.pass)
    } else {
        let r = suites::run_suite(&args.suite, suites::suite_seed(args.seed, &args.suite), &cfg)
            .ok_or_else(|| Fail::Input(format!("unknown suite '{}'; known: all, {}", args.suite, suites::SUITES.join(", "))))?;
        let _ = writeln!(err, "{} {}/{} {:.2}s", r.suite, r.passed, r.instances, r.wall_time_s.unwrap_or(0.0));
        let r = if args.timings { r } else { r.without_timing() };
        (serde_json::to_value(&r).expect("serializable"), r.pass())
    };
    let value = match args.out {
        Some(path) => {
            let text = serde_json::to_string_pretty(&value).expect("serializable");
            std::fs::write(&path, text + "\n").map_err(|e| Fail::Input(format!("{}: {e}", path.display())))?;
            json!({ "schema": SCHEMA, "pass": pass, "report": path.display().to_string() })
        }
        None => value,
    };
    if pass {
        Ok(value)
    } else {
        Err(Fail::compute("verification failures", value))
    }
}
