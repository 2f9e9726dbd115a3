//! Acceptance run: one line per criterion, exit status 1 if any fails.

use std::process::ExitCode;
use std::time::Instant;

use quiltlab_cli::suites::{verify_all, AggregateReport, VerificationReport};
use serde_json::Value;

const SEED: u64 = 20240607;
const TOTAL_LIMIT_S: f64 = 600.0;

struct Criterion {
    id: usize,
    suite: &'static str,
    instances: usize,
    limit_s: Option<f64>,
    extra: fn(&VerificationReport) -> Result<(), String>,
}

fn detail<'a>(r: &'a VerificationReport, key: &str) -> Result<&'a Value, String> {
    r.details.get(key).ok_or_else(|| format!("missing detail '{key}'"))
}

fn parsed(v: &Value) -> Result<f64, String> {
    match v {
        Value::String(s) => s.parse().map_err(|_| format!("not a number: {s}")),
        Value::Number(n) => n.as_f64().ok_or_else(|| "not a number".to_string()),
        _ => Err(format!("not a number: {v}")),
    }
}

fn none(_: &VerificationReport) -> Result<(), String> {
    Ok(())
}

fn composition(r: &VerificationReport) -> Result<(), String> {
    let d = parsed(detail(r, "max_distance")?)?;
    (d < 1e-8).then_some(()).ok_or(format!("max distance {d:e}"))
}

fn immersion(r: &VerificationReport) -> Result<(), String> {
    let forced = detail(r, "forced")?.as_u64();
    (forced == Some(200)).then_some(()).ok_or(format!("forced degenerate {forced:?}"))
}

fn maslov(r: &VerificationReport) -> Result<(), String> {
    let res = parsed(detail(r, "max_winding_residual")?)?;
    if res >= 0.05 {
        return Err(format!("winding residual {res:e}"));
    }
    if detail(r, "generator_loop")? != "1" || detail(r, "half_rotation")? != "1/2" {
        return Err("generator loop or half rotation value".into());
    }
    Ok(())
}

fn moduli(r: &VerificationReport) -> Result<(), String> {
    let m = detail(r, "moduli")?;
    (*m == serde_json::json!([2, 4, 6, 8])).then_some(()).ok_or(format!("moduli {m}"))
}

fn main2(r: &VerificationReport) -> Result<(), String> {
    let e = detail(r, "embedded_compositions")?.as_u64().unwrap_or(0);
    (e > 0).then_some(()).ok_or("no embedded compositions were exercised".into())
}

fn kunneth(r: &VerificationReport) -> Result<(), String> {
    let h = detail(r, "times_two_homology")?;
    (h == "Z/2").then_some(()).ok_or(format!("Z →×2 Z homology {h}"))
}

fn toric(r: &VerificationReport) -> Result<(), String> {
    let s = detail(r, "samples")?.as_u64();
    (s == Some(1000)).then_some(()).ok_or(format!("samples {s:?}"))
}

const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, suite: "composition", instances: 1000, limit_s: Some(10.0), extra: composition },
    Criterion { id: 2, suite: "immersion", instances: 1000, limit_s: Some(10.0), extra: immersion },
    Criterion { id: 3, suite: "maslov", instances: 500, limit_s: Some(60.0), extra: maslov },
    Criterion { id: 4, suite: "degprop", instances: 500, limit_s: Some(120.0), extra: moduli },
    Criterion { id: 5, suite: "insertdiag", instances: 300, limit_s: Some(60.0), extra: moduli },
    Criterion { id: 6, suite: "gradingcomp", instances: 300, limit_s: Some(120.0), extra: none },
    Criterion { id: 7, suite: "contraction", instances: 100, limit_s: Some(10.0), extra: none },
    Criterion { id: 8, suite: "quilt-degree", instances: 300, limit_s: Some(120.0), extra: none },
    Criterion { id: 9, suite: "main2", instances: 300, limit_s: None, extra: main2 },
    Criterion { id: 10, suite: "kunneth", instances: 100, limit_s: None, extra: kunneth },
    Criterion { id: 11, suite: "toric", instances: 32, limit_s: Some(180.0), extra: toric },
];

fn check(c: &Criterion, agg: &AggregateReport) -> Result<String, String> {
    let r = agg.suites.iter().find(|r| r.suite == c.suite).ok_or("suite missing from report")?;
    let t = r.wall_time_s.unwrap_or(f64::NAN);
    let timing = match c.limit_s {
        Some(l) => format!("{t:.1}s / {l:.0}s"),
        None => format!("{t:.1}s"),
    };
    let summary = format!("{} {}/{} ({timing})", c.suite, r.passed, r.instances);
    if r.instances != c.instances {
        return Err(format!("{summary}: expected {} instances", c.instances));
    }
    if let Some(f) = r.failures.first() {
        return Err(format!("{summary}: {} failures, first {}: {}", r.failures.len(), f.check, f.witness));
    }
    if let Some(l) = c.limit_s {
        if !(t < l) {
            return Err(format!("{summary}: over the time limit"));
        }
    }
    (c.extra)(r).map_err(|e| format!("{summary}: {e}"))?;
    Ok(summary)
}

fn timed_run() -> (AggregateReport, f64) {
    let start = Instant::now();
    let r = verify_all(SEED);
    (r, start.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    println!("acceptance: seed {SEED}");
    let (first, t1) = timed_run();
    let mut ok = true;
    for c in &CRITERIA {
        match check(c, &first) {
            Ok(s) => println!("criterion {}: PASS {s}", c.id),
            Err(s) => {
                ok = false;
                println!("criterion {}: FAIL {s}", c.id);
            }
        }
    }

    let (second, t2) = timed_run();
    let a = serde_json::to_string_pretty(&first.without_timing()).unwrap();
    let b = serde_json::to_string_pretty(&second.without_timing()).unwrap();
    let identical = a == b;
    let in_time = t1 < TOTAL_LIMIT_S && t2 < TOTAL_LIMIT_S;
    let line = format!("verify_all {t1:.1}s and {t2:.1}s / {TOTAL_LIMIT_S:.0}s, reports identical: {identical}");
    if identical && in_time && first.pass {
        println!("criterion 12: PASS {line}");
    } else {
        ok = false;
        println!("criterion 12: FAIL {line}, aggregate pass {}", first.pass);
    }

    if ok {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
