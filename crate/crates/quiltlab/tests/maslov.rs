use num_rational::Rational64;
use proptest::prelude::*;
use quiltlab::linalg::{self, Mat};
use quiltlab::maslov::*;
use quiltlab::symplinalg::*;
use std::f64::consts::PI;

fn r_line(n: usize) -> LagrangianFrame {
    LagrangianFrame::new(&standard_space(n), real_lagrangian(n)).unwrap()
}

fn i_line(n: usize) -> LagrangianFrame {
    LagrangianFrame::new(&standard_space(n), linalg::vstack(&Mat::zeros(n, n), &Mat::identity(n, n))).unwrap()
}

fn half(num: i64) -> Rational64 {
    Rational64::new(num, 2)
}

#[test]
fn transverse_constants_do_not_cross() {
    let a = LagrangianPath::constant(&r_line(1));
    let b = LagrangianPath::constant(&i_line(1));
    assert!(find_crossings(&a, &b).unwrap().is_empty());
    assert_eq!(rs_index(&a, &b).unwrap(), half(0));
}

#[test]
fn rotating_line_crosses_at_both_ends() {
    let fixed = LagrangianPath::constant(&r_line(1));
    let rot = LagrangianPath::standard_rotation(1, PI);
    let cs = find_crossings(&rot, &fixed).unwrap();
    assert_eq!(cs.len(), 2);
    assert_eq!(cs[0].s, 0.0);
    assert_eq!(cs[1].s, 1.0);
    for c in &cs {
        assert!(c.endpoint && c.regular);
        assert_eq!(c.dim(), 1);
        assert_eq!(c.signature, 1);
        assert!((c.form[(0, 0)] - PI).abs() < 1e-7);
    }
    // the fixed path first reverses every sign
    let cs = find_crossings(&fixed, &rot).unwrap();
    assert!(cs.iter().all(|c| c.signature == -1));
}

#[test]
fn generator_loop_and_half_rotation() {
    let fixed = LagrangianPath::constant(&r_line(1));
    assert_eq!(rs_index(&LagrangianPath::standard_rotation(1, PI), &fixed).unwrap(), half(2));
    assert_eq!(rs_index(&LagrangianPath::standard_rotation(1, PI / 2.0), &fixed).unwrap(), half(1));
    assert_eq!(rs_index(&fixed, &LagrangianPath::standard_rotation(1, PI)).unwrap(), half(-2));
    assert_eq!(format_half(half(3)), "3/2");
    assert_eq!(format_half(half(2)), "1");
    assert_eq!(format_half(half(-1)), "-1/2");
}

#[test]
fn higher_dimensional_generator() {
    for n in 1..=4 {
        let rot = LagrangianPath::standard_rotation(n, PI);
        let cs = find_crossings(&rot, &LagrangianPath::constant(&r_line(n))).unwrap();
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().all(|c| c.dim() == n && c.signature == n as i64));
        assert_eq!(loop_index(&rot, &r_line(n)).unwrap(), Rational64::from_integer(n as i64));
        assert!((winding_lift(&rot) - n as f64).abs() < 1e-9);
    }
}

#[test]
fn interior_index_of_shifted_rotation() {
    let eps = 0.1;
    let shifted = LagrangianFrame::new(&standard_space(1), rotation(1, eps) * real_lagrangian(1)).unwrap();
    let g = LagrangianPath::rotation(&shifted, PI);
    assert_eq!(rs_index_interior(&g, &r_line(1)).unwrap(), 1);
    let cs = find_crossings(&g, &LagrangianPath::constant(&r_line(1))).unwrap();
    assert_eq!(cs.len(), 1);
    assert!((cs[0].s - (1.0 - eps / PI)).abs() < 1e-8);
    assert_eq!(rs_index_interior(&LagrangianPath::standard_rotation(1, PI), &r_line(1)).unwrap(), 0);
}

#[test]
fn winding_lift_examples() {
    assert_eq!(winding_lift(&LagrangianPath::constant(&random_lagrangian(3, 1))), 0.0);
    assert!((winding_lift(&LagrangianPath::standard_rotation(1, PI)) - 1.0).abs() < 1e-12);
    let a = LagrangianPath::standard_rotation(1, 0.7);
    let b = LagrangianPath::standard_rotation(2, -2.9);
    let sum = winding_lift(&a) + winding_lift(&b);
    assert!((winding_lift(&a.product(&b)) - sum).abs() < 1e-12);
    assert!((winding_lift(&a) - 0.7 / PI).abs() < 1e-12);
}

#[test]
fn product_crossings_are_unions() {
    let eps = 0.3;
    let shifted = LagrangianFrame::new(&standard_space(1), rotation(1, eps) * real_lagrangian(1)).unwrap();
    let g0 = LagrangianPath::rotation(&shifted, PI);
    let g0p = LagrangianPath::standard_rotation(1, 2.0 * PI);
    let c = LagrangianPath::constant(&r_line(1));
    let a = find_crossings(&g0, &c).unwrap();
    let b = find_crossings(&g0p, &c).unwrap();
    let ab = find_crossings(&g0.product(&g0p), &c.product(&c)).unwrap();
    let mut expected: Vec<f64> = a.iter().chain(b.iter()).map(|c| c.s).collect();
    expected.sort_by(|x, y| x.total_cmp(y));
    let got: Vec<f64> = ab.iter().map(|c| c.s).collect();
    assert_eq!(got.len(), expected.len());
    for (g, e) in got.iter().zip(&expected) {
        assert!((g - e).abs() < 1e-8);
    }
    let total: i64 = ab.iter().map(|c| c.dim() as i64).sum();
    assert_eq!(total, a.len() as i64 + b.len() as i64);
}

#[test]
fn tangential_crossing_is_flagged_then_perturbed() {
    // e^{i(t-1/2)^2} R touches R at t = 1/2 with zero derivative
    let sp = standard_space(1);
    let g = LagrangianPath::new(&sp, |t| rotation(1, (t - 0.5) * (t - 0.5)) * real_lagrangian(1));
    let c = LagrangianPath::constant(&r_line(1));
    let cs = find_crossings(&g, &c).unwrap();
    assert_eq!(cs.len(), 1);
    assert!(!cs[0].regular);
    assert!(matches!(rs_index(&g, &c), Err(quiltlab::Error::IrregularCrossing { .. })));
    // rotating clockwise removes the touching point, counterclockwise splits it into two crossings
    assert_eq!(rs_index(&g.perturbed(0.01), &c).unwrap(), half(0));
    let split = find_crossings(&g.perturbed(-0.01), &c).unwrap();
    assert_eq!(split.len(), 2);
    assert_eq!(split.iter().map(|c| c.signature).sum::<i64>(), 0);
}

#[test]
fn coincident_paths_are_rejected() {
    let c = LagrangianPath::constant(&r_line(2));
    assert!(find_crossings(&c, &c).is_err());
}

#[test]
fn discontinuity_is_detected() {
    let sp = standard_space(1);
    let jump = LagrangianPath::new(&sp, |t| if t < 0.5 { real_lagrangian(1) } else { rotation(1, 1.0) * real_lagrangian(1) });
    let c = LagrangianPath::constant(&i_line(1));
    assert!(matches!(find_crossings(&jump, &c), Err(quiltlab::Error::Discontinuous(_, _))));
    assert!(jump.check().is_err());
    assert!(LagrangianPath::standard_rotation(2, 3.0).check().is_ok());
}

#[test]
fn sampled_paths_interpolate_geodesically() {
    let frames: Vec<LagrangianFrame> = (0..=4)
        .map(|k| LagrangianFrame::new(&standard_space(1), rotation(1, PI * k as f64 / 4.0) * real_lagrangian(1)).unwrap())
        .collect();
    let p = LagrangianPath::from_samples(&frames).unwrap();
    let rot = LagrangianPath::standard_rotation(1, PI);
    for k in 0..=20 {
        let t = k as f64 / 20.0;
        assert!(linalg::gap(&p.std_at(t), &rot.std_at(t)) < 1e-12);
    }
    assert_eq!(rs_index(&p, &LagrangianPath::constant(&r_line(1))).unwrap(), half(2));
}

#[test]
fn path_json_formats() {
    let js = r#"{"kind": "rotation", "angle": 3.141592653589793, "n": 2}"#;
    let p: PathJson = serde_json::from_str(js).unwrap();
    let p = p.to_path().unwrap();
    let c: PathJson = serde_json::from_str(r#"{"kind": "constant", "n": 2}"#).unwrap();
    assert_eq!(rs_index(&p, &c.to_path().unwrap()).unwrap(), half(4));
    let s = r#"{"samples": [
        {"space": {"n": 1, "form": "standard"}, "columns": [[1.0, 0.0]]},
        {"space": {"n": 1, "form": "standard"}, "columns": [[0.7071067811865476, 0.7071067811865476]]}
    ]}"#;
    let p: PathJson = serde_json::from_str(s).unwrap();
    let p = p.to_path().unwrap();
    assert!((winding_lift(&p) - 0.25).abs() < 1e-12);
    assert!(serde_json::from_str::<PathJson>(r#"{"kind": "spiral", "n": 1}"#).unwrap().to_path().is_err());
}

#[test]
fn oracle_agreement_on_random_loops() {
    let mut rng = rng_from_seed(2024);
    for i in 0..500 {
        let n = 1 + i % 3;
        let (g, expected) = random_loop(n, 2, &mut rng);
        let lam = random_lagrangian_rng(&standard_space(n), &mut rng);
        let idx = loop_index(&g, &lam).unwrap();
        let w = winding_lift(&g);
        assert!((w - w.round()).abs() < 0.05, "loop {i}");
        assert_eq!(*idx.denom(), 1, "loop {i}");
        assert_eq!(*idx.numer(), w.round() as i64, "loop {i}");
        assert_eq!(*idx.numer(), expected, "loop {i}");
    }
}

fn generic_pair(n: usize, seed: u64) -> (LagrangianPath, LagrangianPath) {
    let mut rng = rng_from_seed(seed);
    let (a, _) = random_loop(n, 1, &mut rng);
    let f0 = random_lagrangian_rng(&standard_space(n), &mut rng);
    let f1 = random_lagrangian_rng(&standard_space(n), &mut rng);
    // open paths: a segment of a loop and a geodesic
    let b = LagrangianPath::from_samples(&[f0, f1]).unwrap();
    (a.restricted(0.1, 0.83), b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn reparametrization_invariance(n in 1usize..4, seed in any::<u64>(), a in -0.9f64..0.9) {
        let (g0, g1) = generic_pair(n, seed);
        let base = rs_index(&g0, &g1);
        prop_assume!(base.is_ok());
        let warp = move |t: f64| t + a * (2.0 * PI * t).sin() / (2.0 * PI);
        let r = rs_index(&g0.reparametrized(warp), &g1.reparametrized(warp)).unwrap();
        prop_assert_eq!(r, base.unwrap());
    }

    #[test]
    fn symplectic_invariance(n in 1usize..4, seed in any::<u64>()) {
        let (g0, g1) = generic_pair(n, seed);
        let base = rs_index(&g0, &g1);
        prop_assume!(base.is_ok());
        let mut rng = rng_from_seed(seed ^ 0xabc);
        let s = random_symplectic(n, &mut rng, 0.8);
        let sp = standard_space(n);
        let r = rs_index(&g0.mapped(&sp, &s), &g1.mapped(&sp, &s)).unwrap();
        prop_assert_eq!(r, base.unwrap());
    }

    #[test]
    fn direct_sum_additivity(n in 1usize..3, m in 1usize..3, seed in any::<u64>()) {
        let (a0, a1) = generic_pair(n, seed);
        let (b0, b1) = generic_pair(m, seed.wrapping_add(99));
        let (ia, ib) = (rs_index(&a0, &a1), rs_index(&b0, &b1));
        prop_assume!(ia.is_ok() && ib.is_ok());
        let s = rs_index(&a0.product(&b0), &a1.product(&b1)).unwrap();
        prop_assert_eq!(s, ia.unwrap() + ib.unwrap());
    }

    #[test]
    fn concatenation_additivity(n in 1usize..4, seed in any::<u64>(), cut in 0.2f64..0.8) {
        let (g0, g1) = generic_pair(n, seed);
        let whole = rs_index(&g0, &g1);
        let left = rs_index(&g0.restricted(0.0, cut), &g1.restricted(0.0, cut));
        let right = rs_index(&g0.restricted(cut, 1.0), &g1.restricted(cut, 1.0));
        prop_assume!(whole.is_ok() && left.is_ok() && right.is_ok());
        prop_assert_eq!(whole.unwrap(), left.unwrap() + right.unwrap());
        let wl = winding_lift(&g0);
        let parts = winding_lift(&g0.restricted(0.0, cut)) + winding_lift(&g0.restricted(cut, 1.0));
        prop_assert!((wl - parts).abs() < 1e-9);
    }

    #[test]
    fn swapping_paths_negates(n in 1usize..4, seed in any::<u64>()) {
        let (g0, g1) = generic_pair(n, seed);
        let a = rs_index(&g0, &g1);
        prop_assume!(a.is_ok());
        prop_assert_eq!(rs_index(&g1, &g0).unwrap(), -a.unwrap());
    }
}
