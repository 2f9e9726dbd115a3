//! Randomized verification suites and the aggregate runner.

use quiltlab::corrlin::{self, compose, compose_fiber, contract_fiber, diagonal, graph, split_lagrangian};
use quiltlab::grading::{self, canonical_diagonal, degree, dual_graded, product_graded, random_graded, random_graded_corr, shift};
use quiltlab::maslov::{self, LagrangianPath};
use quiltlab::quilt::{self, RandomSequenceSpec, SequenceJson, ZeroOracle};
use quiltlab::symplinalg::{self, rng_from_seed, SymplecticSpace};
use quiltlab::toric;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

pub const SCHEMA: &str = "quiltlab/1";

/// Suite names in the order `verify_all` runs them.
pub const SUITES: [&str; 11] = [
    "composition",
    "immersion",
    "maslov",
    "degprop",
    "insertdiag",
    "gradingcomp",
    "contraction",
    "quilt-degree",
    "main2",
    "kunneth",
    "toric",
];

/// Overrides for the default budgets; `None` keeps the suite default.
#[derive(Clone, Debug, Default)]
pub struct SuiteConfig {
    pub instances: Option<usize>,
    pub n_max: Option<usize>,
    pub modulus: Option<i64>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<usize>,
    pub check: String,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: String,
    pub suite: String,
    pub seed: u64,
    pub instances: usize,
    pub passed: usize,
    pub failures: Vec<Failure>,
    #[serde(default)]
    pub details: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }

    /// Copy without the wall time, for reproducible output.
    pub fn without_timing(&self) -> Self {
        VerificationReport { wall_time_s: None, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub schema: String,
    pub seed: u64,
    pub pass: bool,
    pub suites: Vec<VerificationReport>,
}

impl AggregateReport {
    pub fn without_timing(&self) -> Self {
        AggregateReport { suites: self.suites.iter().map(VerificationReport::without_timing).collect(), ..self.clone() }
    }
}

fn derive(seed: u64, tag: u64) -> u64 {
    rng_from_seed(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)).random()
}

/// Seed of a suite under a master seed. Suite "main2" reuses the sequences of "quilt-degree".
pub fn suite_seed(master: u64, suite: &str) -> u64 {
    let family = if suite == "main2" { "quilt-degree" } else { suite };
    let idx = SUITES.iter().position(|s| *s == family).unwrap_or(SUITES.len());
    derive(master, idx as u64 + 1)
}

fn instance_rng(seed: u64, i: usize) -> ChaCha8Rng {
    rng_from_seed(derive(seed, i as u64))
}

type Check = std::result::Result<(), (String, String)>;

fn ensure(cond: bool, check: &str, witness: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err((check.to_string(), witness()))
    }
}

fn err<E: std::fmt::Display>(check: &str) -> impl Fn(E) -> (String, String) + '_ {
    move |e| (check.to_string(), e.to_string())
}

/// Degree with the serialized pair as witness on failure.
fn deg(a: &grading::GradedLagrangian, b: &grading::GradedLagrangian, label: &str) -> std::result::Result<i64, (String, String)> {
    degree(a, b).map_err(|e| {
        let pair = json!([grading::GradedJson::from_graded(a), grading::GradedJson::from_graded(b)]);
        (label.to_string(), format!("{e}: {pair}"))
    })
}

struct Outcome {
    instances: usize,
    failures: Vec<Failure>,
    details: BTreeMap<String, Value>,
}

/// Runs `f` on every instance in parallel, each with its own RNG; results stay in order.
fn run_instances<T, F>(count: usize, seed: u64, f: F) -> (Vec<Failure>, Vec<T>)
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> std::result::Result<T, (String, String)> + Sync,
{
    let results: Vec<_> = (0..count).into_par_iter().map(|i| f(i, &mut instance_rng(seed, i))).collect();
    let mut failures = Vec::new();
    let mut values = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err((check, witness)) => failures.push(Failure { instance: Some(i), check, witness }),
        }
    }
    (failures, values)
}

fn moduli(cfg: &SuiteConfig, default: &[i64]) -> Vec<i64> {
    cfg.modulus.map(|m| vec![m]).unwrap_or_else(|| default.to_vec())
}

pub fn run_suite(name: &str, seed: u64, cfg: &SuiteConfig) -> Option<VerificationReport> {
    let start = Instant::now();
    let out = match name {
        "composition" => composition(seed, cfg),
        "immersion" => immersion(seed, cfg),
        "maslov" => maslov_suite(seed, cfg),
        "degprop" => degprop(seed, cfg),
        "insertdiag" => insertdiag(seed, cfg),
        "gradingcomp" => gradingcomp(seed, cfg),
        "contraction" => contraction(seed, cfg),
        "quilt-degree" => quilt_degree(seed, cfg),
        "main2" => main2(seed, cfg),
        "kunneth" => kunneth(seed, cfg),
        "toric" => toric_suite(seed, cfg),
        _ => return None,
    };
    let passed = out.instances - out.failures.iter().filter_map(|f| f.instance).collect::<std::collections::BTreeSet<_>>().len();
    Some(VerificationReport {
        schema: SCHEMA.into(),
        suite: name.into(),
        seed,
        instances: out.instances,
        passed,
        failures: out.failures,
        details: out.details,
        wall_time_s: Some(start.elapsed().as_secs_f64()),
    })
}

/// Every suite with its default budget, seeds derived from `seed`.
pub fn verify_all(seed: u64) -> AggregateReport {
    let suites: Vec<VerificationReport> = SUITES
        .iter()
        .map(|s| run_suite(s, suite_seed(seed, s), &SuiteConfig::default()).expect("known suite"))
        .collect();
    AggregateReport { schema: SCHEMA.into(), seed, pass: suites.iter().all(VerificationReport::pass), suites }
}

// ---- linear suites ----

fn composition(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let count = cfg.instances.unwrap_or(1000);
    let n_max = cfg.n_max.unwrap_or(4).max(1);
    let tol = cfg.tol.unwrap_or(1e-8);
    let (failures, dists) = run_instances(count, seed, |i, rng| {
        let n = 1 + i % n_max;
        let sp = SymplecticSpace::standard(n);
        let [a, b, c] = [0, 1, 2].map(|_| symplinalg::random_symplectic(n, rng, 1.0));
        let e = err("graph");
        let (ga, gb, gc) = (graph(&a, &sp).map_err(&e)?, graph(&b, &sp).map_err(&e)?, graph(&c, &sp).map_err(&e)?);
        let e = err("compose");
        let ab = compose(&ga, &gb).map_err(&e)?;
        let d_graph = ab.composed.distance(&graph(&(&b * &a), &sp).map_err(&e)?);
        ensure(ab.transverse && d_graph < tol, "graph∘graph = graph of the product", || format!("n = {n}, distance {d_graph:.3e}"))?;
        let diag = diagonal(&sp);
        let d_left = compose(&diag, &ga).map_err(&e)?.composed.distance(&ga);
        let d_right = compose(&ga, &diag).map_err(&e)?.composed.distance(&ga);
        ensure(d_left < tol && d_right < tol, "identity", || format!("n = {n}, distances {d_left:.3e}, {d_right:.3e}"))?;
        let bc = compose(&gb, &gc).map_err(&e)?;
        let l = compose(&ab.composed, &gc).map_err(&e)?.composed;
        let r = compose(&ga, &bc.composed).map_err(&e)?.composed;
        let d_assoc = l.distance(&r);
        ensure(d_assoc < tol, "associativity", || format!("n = {n}, distance {d_assoc:.3e}"))?;
        Ok(d_graph.max(d_left).max(d_right).max(d_assoc))
    });
    let worst = dists.iter().fold(0.0f64, |m, &d| m.max(d));
    Outcome { instances: count, failures, details: BTreeMap::from([("max_distance".into(), json!(format!("{worst:.1e}")))]) }
}

fn immersion(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let count = cfg.instances.unwrap_or(1000);
    let forced = count / 5;
    let n_max = cfg.n_max.unwrap_or(3).clamp(1, 3);
    let (failures, defects) = run_instances(count, seed, |i, rng| {
        let n1 = 1 + (i / 3) % n_max;
        let n = (i % (n_max + 1), n1, (i / 9) % (n_max + 1));
        let k = if i < forced { 1 + i % n1 } else { 0 };
        let (c01, c12) = corrlin::random_degenerate_pair(n, k, rng).map_err(err("pair"))?;
        let r = compose(&c01, &c12).map_err(err("compose"))?;
        let w = || format!("dims {n:?}, forced {k}: kernel {}, defect {}", r.kernel.dim(), r.defect);
        ensure(r.kernel.dim() == r.defect, "dim kernel = defect", w)?;
        ensure(k == 0 || r.defect == k, "forced defect", w)?;
        ensure(r.transverse == (r.defect == 0), "transverse iff defect 0", w)?;
        Ok(r.defect)
    });
    let degenerate = defects.iter().filter(|&&d| d > 0).count();
    Outcome {
        instances: count,
        failures,
        details: BTreeMap::from([("forced".into(), json!(forced)), ("degenerate".into(), json!(degenerate))]),
    }
}

fn maslov_suite(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let count = cfg.instances.unwrap_or(500);
    let n_max = cfg.n_max.unwrap_or(3).max(1);
    let tol = cfg.tol.unwrap_or(0.05);
    let (mut failures, residuals) = run_instances(count, seed, |i, rng| {
        let n = 1 + i % n_max;
        let (g, expected) = maslov::random_loop(n, 2, rng);
        let lam = symplinalg::random_lagrangian_rng(&SymplecticSpace::standard(n), rng);
        let idx = maslov::loop_index(&g, &lam).map_err(err("crossing form"))?;
        let w = maslov::winding_lift(&g);
        let res = (w - w.round()).abs();
        let witness = || format!("n = {n}: crossing index {idx}, winding {w:.6}, construction {expected}");
        ensure(res < tol, "winding residual", witness)?;
        ensure(*idx.denom() == 1 && *idx.numer() == w.round() as i64, "crossing form = winding", witness)?;
        ensure(*idx.numer() == expected, "crossing form = construction", witness)?;
        Ok(res)
    });
    let fixed = LagrangianPath::constant(&symplinalg::LagrangianFrame::new(&SymplecticSpace::standard(1), maslov::real_lagrangian(1)).expect("real line"));
    let mut exact = BTreeMap::new();
    for (name, angle, want) in [("generator_loop", PI, "1"), ("half_rotation", PI / 2.0, "1/2")] {
        let got = maslov::rs_index(&LagrangianPath::standard_rotation(1, angle), &fixed).map(maslov::format_half);
        let s = got.as_ref().map(String::clone).unwrap_or_else(|e| e.to_string());
        if s != want {
            failures.push(Failure { instance: None, check: name.into(), witness: format!("expected {want}, got {s}") });
        }
        exact.insert(name.to_string(), json!(s));
    }
    let worst = residuals.iter().fold(0.0f64, |m, &d| m.max(d));
    let mut details = BTreeMap::from([("max_winding_residual".into(), json!(format!("{worst:.1e}")))]);
    details.extend(exact.into_iter().map(|(k, v)| (k, v)));
    Outcome { instances: count, failures, details }
}

/// Smallest singular value of [Λa Λb] accepted for a random transverse pair.
const PAIR_MARGIN: f64 = 1e-3;

/// Random graded pair with transversality margin at least [`PAIR_MARGIN`], and the number of
/// redrawn candidates.
fn transverse_pair(sp: &SymplecticSpace, m: i64, rng: &mut ChaCha8Rng) -> (grading::GradedLagrangian, grading::GradedLagrangian, usize) {
    let a = random_graded(sp, m, rng);
    let mut redrawn = 0;
    loop {
        let b = random_graded(sp, m, rng);
        let margin = quiltlab::linalg::sigma_min(&quiltlab::linalg::hstack(&a.frame().std(), &b.frame().std()));
        if margin >= PAIR_MARGIN {
            return (a, b, redrawn);
        }
        redrawn += 1;
    }
}

fn degprop(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let count = cfg.instances.unwrap_or(500);
    let n_max = cfg.n_max.unwrap_or(3).max(1);
    let ms = moduli(cfg, &[2, 4, 6, 8]);
    let (failures, redrawn) = run_instances(count, seed, |i, rng| {
        let m = ms[i % ms.len()];
        let n = 1 + i % n_max;
        let sp = SymplecticSpace::standard(n);
        let (a, b, r1) = transverse_pair(&sp, m, rng);
        let e = err("degree");
        let d = deg(&a, &b, "d(a, b)")?;
        let ba = deg(&b, &a, "d(b, a)")?;
        let dual = deg(&dual_graded(&a), &dual_graded(&b), "d(a⁻, b⁻)")?;
        let w = || format!("N = {m}, n = {n}, d(a,b) = {d}, d(b,a) = {ba}, d(a⁻,b⁻) = {dual}");
        ensure((d + ba).rem_euclid(m) == n as i64 % m && (d + dual).rem_euclid(m) == n as i64 % m, "(a) skewsymmetry", w)?;
        let c = rng.random_range(-2 * m..=2 * m);
        let dc = deg(&a, &shift(&b, c), "d(a, c·b)")?;
        ensure(dc == (d + c).rem_euclid(m), "(b) multiplicativity", || format!("N = {m}, c = {c}: {dc} vs {d} + c"))?;
        let n2 = 1 + rng.random_range(0..n_max);
        let sp2 = SymplecticSpace::standard(n2);
        let (a2, b2, r2) = transverse_pair(&sp2, m, rng);
        let lhs = deg(&product_graded(&a, &a2).map_err(&e)?, &product_graded(&b, &b2).map_err(&e)?, "d(a × a', b × b')")?;
        let d2 = deg(&a2, &b2, "d(a', b')")?;
        ensure(lhs == (d + d2).rem_euclid(m), "(c) additivity", || format!("N = {m}: {lhs} vs {d} + {d2}"))?;
        let diag = canonical_diagonal(&sp, m).map_err(&e)?;
        let dd = deg(&diag, &product_graded(&dual_graded(&a), &b).map_err(&e)?, "d(Δ, a⁻ × b)")?;
        ensure(dd == d, "(d) diagonal", || format!("N = {m}, n = {n}: {dd} vs {d}"))?;
        Ok(r1 + r2)
    });
    Outcome {
        instances: count,
        failures,
        details: BTreeMap::from([("moduli".into(), json!(ms)), ("redrawn_near_tangent".into(), json!(redrawn.iter().sum::<usize>()))]),
    }
}

fn insertdiag(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let count = cfg.instances.unwrap_or(300);
    let ms = moduli(cfg, &[2, 4, 6, 8]);
    let d = cfg.n_max.unwrap_or(2).max(1);
    let std = SymplecticSpace::standard;
    let (failures, _) = run_instances(count, seed, |i, rng| {
        let m = ms[i % ms.len()];
        let (n0, n1, n2) = (rng.random_range(0..=d), rng.random_range(0..=d), rng.random_range(0..=d));
        let (v0, v1, v2) = (std(n0), std(n1), std(n2));
        let l0 = random_graded(&v0, m, rng);
        let l2 = random_graded(&v2.dual(), m, rng);
        let l01 = random_graded_corr(&v0, &v1, m, rng);
        let l12 = random_graded_corr(&v1, &v2, m, rng);
        let (a, b) = grading::insert_diagonal_a(&l0, &l01, &l12, &l2).map_err(err("(a)"))?;
        ensure(a == b, "(a)", || format!("N = {m}, dims ({n0},{n1},{n2}): {a} vs {b}"))?;
        let (k0, k1) = (rng.random_range(1..=d), rng.random_range(0..=d));
        let (w0, w1) = (std(k0), std(k1));
        let lam = random_graded(&w0.dual().product(&w1).product(&w0), m, rng);
        let k = random_graded(&w0.product(&w0.dual()).product(&w1), m, rng);
        let (a, b) = grading::insert_diagonal_b(&w0, &w1, &lam, &k).map_err(err("(b)"))?;
        ensure(a == b, "(b)", || format!("N = {m}, dims ({k0},{k1}): {a} vs {b}"))?;
        Ok(())
    });
    Outcome { instances: count, failures, details: BTreeMap::from([("moduli".into(), json!(ms))]) }
}

fn gradingcomp(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let count = cfg.instances.unwrap_or(300);
    let ms = moduli(cfg, &[2, 4, 6, 8]);
    let d = cfg.n_max.unwrap_or(2).max(1);
    let std = SymplecticSpace::standard;
    let (failures, resampled) = run_instances(count, seed, |i, rng| {
        let m = ms[i % ms.len()];
        let mut tries = 0usize;
        loop {
            let (n0, n1, n2) = (rng.random_range(0..=d), rng.random_range(1..=d), rng.random_range(0..=d));
            let (v0, v1, v2) = (std(n0), std(n1), std(n2));
            let l01 = random_graded_corr(&v0, &v1, m, rng);
            let l12 = random_graded_corr(&v1, &v2, m, rng);
            if !corrlin::is_embedded_linear(l01.corr(), l12.corr()) {
                tries += 1;
                continue;
            }
            let l0 = random_graded(&v0, m, rng);
            let l2 = random_graded(&v2.dual(), m, rng);
            let (a, b) = grading::composition_degrees(&l0, &l01, &l12, &l2).map_err(err("degree"))?;
            ensure(a == b, "triple = composed", || format!("N = {m}, dims ({n0},{n1},{n2}): {a} vs {b}"))?;
            return Ok(tries);
        }
    });
    Outcome {
        instances: count,
        failures,
        details: BTreeMap::from([("non_embedded_resampled".into(), json!(resampled.iter().sum::<usize>()))]),
    }
}

fn contraction(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let count = cfg.instances.unwrap_or(100);
    let tol = cfg.tol.unwrap_or(1e-8);
    let d = cfg.n_max.unwrap_or(2).max(1);
    let std = SymplecticSpace::standard;
    let (failures, _) = run_instances(count, seed, |_, rng| {
        let (n, lam, c02) = loop {
            let n = (rng.random_range(0..=d), rng.random_range(1..=d), rng.random_range(0..=d));
            let fs = corrlin::fiber_space(&std(n.0), &std(n.1), &std(n.2));
            let lam = symplinalg::random_lagrangian_rng(&fs, rng);
            if let Ok(c02) = compose_fiber(&lam, &std(n.0), &std(n.1), &std(n.2)) {
                break (n, lam, c02);
            }
        };
        let e = err("contraction");
        let r0 = contract_fiber(&lam, n, 0.0).map_err(&e)?;
        ensure(r0.distance(&lam) < tol, "ρ_0 = Id", || format!("dims {n:?}: {:.3e}", r0.distance(&lam)))?;
        let r1 = contract_fiber(&lam, n, 1.0).map_err(&e)?;
        let split = split_lagrangian(&c02, &std(n.1)).map_err(&e)?;
        ensure(r1.distance(&split) < tol, "ρ_1 split", || format!("dims {n:?}: {:.3e}", r1.distance(&split)))?;
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let rt = contract_fiber(&lam, n, t).map_err(&e)?;
            let ct = compose_fiber(&rt, &std(n.0), &std(n.1), &std(n.2)).map_err(&e)?;
            let dist = ct.distance(&c02);
            ensure(dist < tol && rt.isotropy_residual() < tol, "composition constant in t", || {
                format!("dims {n:?}, t = {t}: distance {dist:.3e}, isotropy {:.3e}", rt.isotropy_residual())
            })?;
        }
        Ok(())
    });
    Outcome { instances: count, failures, details: BTreeMap::new() }
}

// ---- lattice quilts ----

fn lattice_spec(i: usize, cfg: &SuiteConfig) -> RandomSequenceSpec {
    let modulus = cfg.modulus.unwrap_or(if i % 2 == 0 { 2 } else { 4 });
    RandomSequenceSpec { max_len: 5, max_n: cfg.n_max.unwrap_or(2).max(1), modulus, ..Default::default() }
}

fn sequence_witness(seq: &quilt::CyclicSequence) -> String {
    serde_json::to_string(&SequenceJson::from_sequence(seq)).unwrap_or_default()
}

fn quilt_degree(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let count = cfg.instances.unwrap_or(300);
    let (failures, gens) = run_instances(count, seed, |i, rng| {
        let seq = quilt::random_sequence(&lattice_spec(i, cfg), rng);
        let pts = quilt::intersection_points(&seq).map_err(|e| ("generators".into(), format!("{e}: {}", sequence_witness(&seq))))?;
        for g in &pts {
            let e = |e: quiltlab::Error| ("degree".to_string(), format!("{e}: {}", sequence_witness(&seq)));
            let a = quilt::generator_degree_alt_a(&seq, g, derive(seed, i as u64)).map_err(e)?;
            let b = quilt::generator_degree_alt_b(&seq, g).map_err(e)?;
            let d = quilt::generator_degree(&seq, g).map_err(e)?;
            ensure(d == g.degree && a == d && b == d, "three degree formulas", || {
                format!("definition {d}, (a) {a}, (b) {b} at {:?} in {}", g.points, sequence_witness(&seq))
            })?;
        }
        Ok(pts.len())
    });
    Outcome { instances: count, failures, details: BTreeMap::from([("generators".into(), json!(gens.iter().sum::<usize>()))]) }
}

fn main2(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let count = cfg.instances.unwrap_or(300);
    let (failures, tallies) = run_instances(count, seed, |i, rng| {
        let seq = quilt::random_sequence(&lattice_spec(i, cfg), rng);
        let (mut embedded, mut skipped) = (0usize, 0usize);
        for j in 1..seq.len() {
            match quilt::compose_at(&seq, j) {
                Ok(c) => {
                    let (a, b) = c.degree_multisets();
                    ensure(c.before.len() == c.after.len() && a == b && c.preserves_degrees(), "generators and degrees", || {
                        format!("position {j}: {} → {} generators, degrees {a:?} vs {b:?} in {}", c.before.len(), c.after.len(), sequence_witness(&seq))
                    })?;
                    embedded += 1;
                }
                Err(quiltlab::Error::NotEmbedded(_)) => skipped += 1,
                Err(e) => return Err(("compose_at".into(), format!("position {j}: {e} in {}", sequence_witness(&seq)))),
            }
        }
        Ok((embedded, skipped))
    });
    Outcome {
        instances: count,
        failures,
        details: BTreeMap::from([
            ("embedded_compositions".into(), json!(tallies.iter().map(|t| t.0).sum::<usize>())),
            ("non_embedded".into(), json!(tallies.iter().map(|t| t.1).sum::<usize>())),
        ]),
    }
}

fn kunneth(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let count = cfg.instances.unwrap_or(100);
    let (mut failures, _) = run_instances(count, seed, |i, rng| {
        let j = 1 + i % 3;
        let spec = RandomSequenceSpec { pointed: true, split_at: Some(j), modulus: cfg.modulus.unwrap_or(4), ..Default::default() };
        let seq = quilt::random_sequence(&spec, rng);
        let w = || sequence_witness(&seq);
        let k = quilt::kunneth_split(&seq, j).map_err(|e| ("split".to_string(), format!("{e}: {}", w())))?;
        ensure(k.degrees_add(), "degrees add", w)?;
        let e = |e: quiltlab::Error| ("complex".to_string(), format!("{e}: {}", w()));
        let (_, cx) = quilt::build_complex(&seq, &ZeroOracle).map_err(e)?;
        let (_, cl) = quilt::build_complex(&k.left, &ZeroOracle).map_err(e)?;
        let (_, cr) = quilt::build_complex(&k.right, &ZeroOracle).map_err(e)?;
        let t = quilt::tensor_complex(&cl, &cr).and_then(|t| t.reindexed(&k.tensor_order())).map_err(e)?;
        ensure(t.degrees() == cx.degrees(), "tensor degrees", w)?;
        let h = quilt::homology(&cx).map_err(e)?;
        let (hl, hr) = (quilt::homology(&cl).map_err(e)?, quilt::homology(&cr).map_err(e)?);
        ensure(h.total_rank() == hl.total_rank() * hr.total_rank(), "ranks multiply", w)?;
        let p = quilt::kunneth_prediction(&hl, &hr).map_err(e)?;
        ensure(h.is_isomorphic(&p), "Künneth prediction", w)?;
        Ok(())
    });
    let times_two = quilt::GradedChainComplex::from_oracle(vec![0, 1], 2, &|from: usize, to: usize| if (from, to) == (0, 1) { 2 } else { 0 })
        .and_then(|c| quilt::homology(&c));
    let torsion = match &times_two {
        Ok(h) if h.groups[0].is_zero() && h.groups[1] == quilt::AbelianGroup { betti: 0, torsion: vec![2] } => json!("Z/2"),
        Ok(h) => {
            failures.push(Failure { instance: None, check: "Z →×2 Z".into(), witness: format!("{:?}", h.groups) });
            json!(format!("{:?}", h.groups))
        }
        Err(e) => {
            failures.push(Failure { instance: None, check: "Z →×2 Z".into(), witness: e.to_string() });
            json!(e.to_string())
        }
    };
    Outcome { instances: count, failures, details: BTreeMap::from([("times_two_homology".into(), torsion)]) }
}

// ---- toric ----

enum ToricCheck {
    Moments(usize),
    Tau(usize),
    Compositions(usize),
    Reduction(usize, usize),
    Clifford(usize),
    Calc(usize),
    Sphere(usize, usize),
}

fn toric_checks() -> Vec<ToricCheck> {
    let mut v: Vec<ToricCheck> = (1..=6).map(ToricCheck::Moments).collect();
    v.extend((2..=6).map(ToricCheck::Tau));
    v.extend((2..=4).map(ToricCheck::Compositions));
    for n in 2..=4 {
        v.extend((2..=n).map(|k| ToricCheck::Reduction(k, n)));
    }
    v.extend((1..=4).map(ToricCheck::Clifford));
    v.extend([2, 3].map(ToricCheck::Calc));
    for n in 2..=4 {
        v.extend((2..=n).map(|k| ToricCheck::Sphere(k, n)));
    }
    v
}

fn toric_check(check: &ToricCheck, samples: usize, tol: f64, rng: &mut ChaCha8Rng) -> std::result::Result<String, (String, String)> {
    use toric::*;
    let e = |name: &'static str| move |x: quiltlab::Error| (name.to_string(), x.to_string());
    match *check {
        ToricCheck::Moments(n) => {
            let level = Q::new(1, n as i64 + 1);
            let mut family = vec![clifford(n)];
            for k in 2..=n {
                family.push(sigma(k, n).map_err(e("sigma"))?);
            }
            for j in 1..=n {
                family.push(sigma_j(j, n).map_err(e("sigma_j"))?);
            }
            for c in &family {
                let prescribed: Vec<usize> = c.target_levels.iter().map(|l| l.0).collect();
                ensure(c.target_levels.iter().all(|l| l.1 == level), "exact level", || format!("n = {n}: {:?}", c.target_levels))?;
                for _ in 0..100 {
                    let (_, z) = c.sample(rng).map_err(e("sample"))?;
                    for &j in &prescribed {
                        let mu = z.moment(j).map_err(e("moment"))?;
                        ensure((mu - PI / (n as f64 + 1.0)).abs() < tol, "sampled level", || format!("n = {n}, j = {j}: μ = {mu}"))?;
                    }
                }
            }
            Ok(format!("moments n = {n}: {} families", family.len()))
        }
        ToricCheck::Tau(n) => {
            let r = tau_report(n).map_err(e("tau"))?;
            ensure(r.consistent, "τ = π/(n+1)", || serde_json::to_string(&r).unwrap_or_default())?;
            Ok(format!("tau n = {n}: {}π", r.ambient))
        }
        ToricCheck::Compositions(n) => {
            let s = sigma(2, n).map_err(e("sigma"))?;
            let s1 = sigma_j(1, n).map_err(e("sigma_j"))?;
            let (t1, tn1, tn) = (clifford_in(s.source), clifford_in(s1.source), clifford(n));
            let product = split_product(&t1, &tn1).map_err(e("product"))?;
            let seed: u64 = rng.random();
            let cases = [
                ("T^1 ∘ Σ_(2..n)", &t1, &s, tn.clone()),
                ("Σ_1ᵗ ∘ T^{n-1}", &s1.transpose(), &tn1.transpose(), tn.transpose()),
                ("Σ_(2..n) ∘ Σ_1ᵗ", &s, &s1.transpose(), product),
            ];
            let mut margin = f64::INFINITY;
            for (i, (name, a, b, expect)) in cases.into_iter().enumerate() {
                let c = compose_toric(a, b, samples, seed.wrapping_add(i as u64)).map_err(e(name))?;
                let same = c.composed.same_set(&expect).map_err(e(name))?;
                ensure(c.embedded && same && c.samples == samples, name, || format!("n = {n}: {:?}", c.witness))?;
                margin = margin.min(c.min_margin);
            }
            Ok(format!("compositions n = {n}: {samples} samples, margin {margin:.2e}"))
        }
        ToricCheck::Reduction(k, n) => {
            let s = sigma(k, n).map_err(e("sigma"))?;
            let c = compose_toric(&clifford_in(s.source), &s, samples, rng.random()).map_err(e("compose"))?;
            let same = c.composed.same_set(&clifford(n)).map_err(e("compose"))?;
            ensure(c.embedded && same, "T^{k-1} ∘ Σ_(k..n) = T^n", || format!("k = {k}, n = {n}: {:?}", c.witness))?;
            Ok(format!("T^{} ∘ Σ_({k}..{n}) embedded", k - 1))
        }
        ToricCheck::Clifford(n) => {
            let g = perturbed_generators(n, None).map_err(e("generators"))?;
            let counts: Vec<usize> = (0..=n).map(|i| g.iter().filter(|x| x.index == i).count()).collect();
            let binom: Vec<usize> = (0..=n).map(|k| (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))).collect();
            ensure(g.len() == 1 << n && counts == binom, "Clifford generators", || format!("n = {n}: {counts:?}"))?;
            Ok(format!("clifford n = {n}: {counts:?}"))
        }
        ToricCheck::Calc(n) => {
            let r = calc_chain(n, samples.min(200), rng.random()).map_err(e("calc"))?;
            ensure(r.consistent, "calc chain", || serde_json::to_string(&r.bijections).unwrap_or_default())?;
            Ok(format!("calc n = {n}: {:?}", r.steps.iter().map(|s| s.count).collect::<Vec<_>>()))
        }
        ToricCheck::Sphere(k, n) => {
            let (quilt, pair) = sphere_sequences(k, n).map_err(e("sequences"))?;
            let a = quilt.generators(None).map_err(e("generators"))?;
            let b = pair.generators(None).map_err(e("generators"))?;
            ensure(a.len() == 1 << n && b.len() == 1 << n, "sphere generator count", || format!("k = {k}, n = {n}: {} vs {}", a.len(), b.len()))?;
            Ok(format!("(T^{}, Σ_({k}..{n}), T^{n}): {}", k - 1, a.len()))
        }
    }
}

fn toric_suite(seed: u64, cfg: &SuiteConfig) -> Outcome {
    let checks = toric_checks();
    let samples = cfg.instances.unwrap_or(1000);
    let tol = cfg.tol.unwrap_or(1e-12);
    let (failures, notes) = run_instances(checks.len(), seed, |i, rng| toric_check(&checks[i], samples, tol, rng));
    Outcome { instances: checks.len(), failures, details: BTreeMap::from([("checks".into(), json!(notes)), ("samples".into(), json!(samples))]) }
}
