use std::path::{Path, PathBuf};

use quiltlab::corrlin::{CorrespondenceJson, LinearCorrespondence};
use quiltlab::intlin::IMat;
use quiltlab::quilt::*;
use quiltlab::symplinalg::{random_lagrangian, SymplecticSpace};
use quiltlab_cli::suites::{AggregateReport, VerificationReport};
use serde_json::Value;
use tempfile::TempDir;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Output {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.stdout))
    }
}

fn run(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("quiltlab").chain(args.iter().copied());
    let code = quiltlab_cli::run_with(argv, &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn write_json<T: serde::Serialize>(dir: &TempDir, name: &str, v: &T) -> PathBuf {
    write(dir, name, &serde_json::to_string_pretty(v).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn circle(amb: &Torus, dir: [i128; 2], offset: [f64; 2]) -> LatticeLagrangian {
    LatticeLagrangian::new(amb, IMat::from_column_slice(2, 1, &dir), offset.to_vec()).unwrap()
}

/// pt → T² → pt with circles of slopes (1,0) and (1,2): two generators.
fn circle_pair() -> CyclicSequence {
    let t2 = Torus::standard(1);
    let a = circle(&t2, [1, 0], [0.0, 0.3]);
    let b = circle(&t2.dual(), [1, 2], [0.1, 0.0]);
    let c0 = GradedLattice::new(LatticeCorrespondence::from_point(a), 0);
    let c1 = GradedLattice::new(LatticeCorrespondence::to_point(b), 0);
    CyclicSequence::unperturbed(vec![Torus::point(), t2], vec![c0, c1], 2).unwrap()
}

#[test]
fn degprop_example_passes() {
    let o = run(&["verify", "--suite", "degprop", "--n-max", "3", "--instances", "500", "--seed", "7"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let r: VerificationReport = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!((r.passed, r.instances), (500, 500));
    assert!(r.failures.is_empty());
    assert_eq!(r.schema, "quiltlab/1");
}

#[test]
fn degenerate_composition_exits_one_with_kernel() {
    let dir = TempDir::new().unwrap();
    let pt = SymplecticSpace::point();
    let std1 = SymplecticSpace::standard(1);
    let lam = random_lagrangian(1, 3);
    let a = LinearCorrespondence::new(&pt, &std1, lam.cols().clone()).unwrap();
    let b = LinearCorrespondence::new(&std1, &pt, lam.cols().clone()).unwrap();
    let pa = write_json(&dir, "a.json", &CorrespondenceJson::from_corr(&a));
    let pb = write_json(&dir, "b.json", &CorrespondenceJson::from_corr(&b));
    let o = run(&["compose", s(&pa), s(&pb)]);
    assert_eq!(o.code, 1, "{}", o.stderr);
    let v = o.json();
    assert_eq!(v["embedded"], false);
    assert_eq!(v["report"]["kernel"].as_array().unwrap().len(), 1);
    assert!(o.stderr.contains("kernel dimension 1"));
}

#[test]
fn transverse_composition_exits_zero() {
    let dir = TempDir::new().unwrap();
    let pt = SymplecticSpace::point();
    let std1 = SymplecticSpace::standard(1);
    let a = LinearCorrespondence::new(&pt, &std1, random_lagrangian(1, 3).cols().clone()).unwrap();
    let b = LinearCorrespondence::new(&std1, &pt, random_lagrangian(1, 4).cols().clone()).unwrap();
    let pa = write_json(&dir, "a.json", &CorrespondenceJson::from_corr(&a));
    let pb = write_json(&dir, "b.json", &CorrespondenceJson::from_corr(&b));
    let o = run(&["compose", s(&pa), s(&pb)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.json()["embedded"], true);
}

#[test]
fn toric_calc_n2_lists_four_generators() {
    let o = run(&["toric", "calc", "--n", "2"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v = o.json();
    assert_eq!(v["consistent"], true);
    let steps = v["steps"].as_array().unwrap();
    for step in &steps[..4] {
        assert_eq!(step["count"], 4);
        assert_eq!(step["generators"].as_array().unwrap().len(), 4);
    }
    for c in v["compositions"].as_array().unwrap() {
        assert_eq!(c["embedded"], true);
    }
}

#[test]
fn toric_tau_is_exact() {
    let o = run(&["toric", "tau", "--n", "3"]);
    assert_eq!(o.code, 0);
    let v = o.json();
    assert_eq!(v["ambient"], "1/4");
    assert!(v["reduced"].as_array().unwrap().iter().all(|r| r["tau"] == "1/4"));
}

#[test]
fn toric_compose_and_generators() {
    let o = run(&["toric", "compose", "--k", "2", "--n", "3", "--samples", "100"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let o = run(&["toric", "generators", "--n", "3"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("\"count\": 8"));
}

#[test]
fn maslov_half_integers() {
    let dir = TempDir::new().unwrap();
    let r = write(&dir, "r.json", r#"{"kind":"rotation","angle":1.5707963267948966,"n":1}"#);
    let c = write(&dir, "c.json", r#"{"kind":"constant","n":1}"#);
    let o = run(&["maslov", s(&r), s(&c)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.json()["index"], "1/2");
}

#[test]
fn quilt_commands_on_a_circle_pair() {
    let dir = TempDir::new().unwrap();
    let seq = circle_pair();
    let p = write_json(&dir, "seq.json", &SequenceJson::from_sequence(&seq));

    let o = run(&["quilt", "generators", s(&p)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.json()["count"], 2);

    let o = run(&["quilt", "degrees", s(&p), "--seed", "3"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.json()["agree"], true);

    let o = run(&["quilt", "homology", s(&p)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.json()["total_rank"], 2);

    let ins = insert_diagonal(&seq, 1).unwrap();
    let q = write_json(&dir, "ins.json", &SequenceJson::from_sequence(&ins));
    let o = run(&["quilt", "compose", s(&q), "--at", "1"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.json()["preserves_degrees"], true);

    let o = run(&["quilt", "compose", s(&q), "--at", "0"]);
    assert_eq!(o.code, 2);
}

#[test]
fn malformed_input_exits_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"kind":"rotation""#);
    let c = write(&dir, "c.json", r#"{"kind":"constant","n":1}"#);
    let o = run(&["maslov", s(&bad), s(&c)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("bad.json"));

    let mut v = serde_json::to_value(SequenceJson::from_sequence(&circle_pair())).unwrap();
    v["correspondences"][1]["directions"] = serde_json::json!([[1, 1, 1]]);
    let p = write_json(&dir, "seq.json", &v);
    let o = run(&["quilt", "generators", s(&p)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("/correspondences/1"), "{}", o.stderr);

    assert_eq!(run(&["verify", "--suite", "bogus"]).code, 2);
    assert_eq!(run(&["verify", "--frobnicate"]).code, 2);
    assert_eq!(run(&["toric", "tau"]).code, 2);
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let dir = TempDir::new().unwrap();
    let args = ["verify", "--suite", "composition", "--instances", "50", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let r: VerificationReport = serde_json::from_str(&a.stdout).unwrap();
    assert_eq!(serde_json::to_value(&r).unwrap(), a.json());
    assert!(r.wall_time_s.is_none());

    let out = dir.path().join("report.json");
    let o = run(&["verify", "--suite", "kunneth", "--instances", "10", "--seed", "11", "--timings", "--out", s(&out)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let r: VerificationReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(r.wall_time_s.is_some());
    assert_eq!(r.passed, 10);
}

#[test]
fn aggregate_report_parses() {
    let js = serde_json::to_string(&AggregateReport {
        schema: "quiltlab/1".into(),
        seed: 1,
        pass: true,
        suites: vec![],
    })
    .unwrap();
    let back: AggregateReport = serde_json::from_str(&js).unwrap();
    assert!(back.pass);
}
