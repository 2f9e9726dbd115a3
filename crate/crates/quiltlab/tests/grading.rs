use proptest::prelude::*;
use quiltlab::corrlin::{self, graph};
use quiltlab::grading::*;
use quiltlab::linalg::{self, Mat};
use quiltlab::maslov::real_lagrangian;
use quiltlab::symplinalg::*;
use quiltlab::Error;

fn std(n: usize) -> SymplecticSpace {
    standard_space(n)
}

fn frame(n: usize, cols: Mat) -> LagrangianFrame {
    LagrangianFrame::new(&std(n), cols).unwrap()
}

#[test]
fn principal_lifts() {
    let r = frame(1, real_lagrangian(1));
    let ir = frame(1, Mat::from_column_slice(2, 1, &[0.0, 1.0]));
    assert_eq!(grade(&r, 0, 2).unwrap().theta(), 0.0);
    assert!((grade(&ir, 0, 2).unwrap().theta() - 0.5).abs() < 1e-15);
    let f = random_lagrangian(3, 4);
    for k in -3..6 {
        let d = grade(&f, k, 4).unwrap().theta() - grade(&f, 0, 4).unwrap().theta();
        assert_eq!(d, k as f64);
    }
    let classes: Vec<i64> = (0..4).map(|k| grade(&f, k, 4).unwrap().class().floor() as i64).collect();
    assert_eq!(classes, vec![0, 1, 2, 3]);
}

#[test]
fn odd_or_nonpositive_modulus_is_rejected() {
    let f = random_lagrangian(1, 1);
    for n in [-2, 0, 1, 3, 7] {
        assert!(matches!(grade(&f, 0, n), Err(Error::InvalidModulus(_))));
    }
    assert!(GradedLagrangian::new(f.clone(), 0.123, 2).is_err());
}

#[test]
fn degree_of_real_and_imaginary_lines() {
    let r = grade(&frame(1, real_lagrangian(1)), 0, 4).unwrap();
    let ir = grade(&frame(1, Mat::from_column_slice(2, 1, &[0.0, 1.0])), 0, 4).unwrap();
    // the quarter turn from R to iR is the positive arc itself
    assert_eq!(degree(&r, &ir).unwrap(), 0);
    assert_eq!(degree(&ir, &r).unwrap(), 1);
    assert_eq!(degree_closed_form(&r, &ir).unwrap(), 0);
    assert!(matches!(degree(&r, &r), Err(Error::NotTransverse(_))));
    let r2 = grade(&frame(1, real_lagrangian(1)), 0, 2).unwrap();
    assert!(matches!(degree(&r2, &ir), Err(Error::ModulusMismatch(2, 4))));
}

#[test]
fn path_degree_matches_phase_formula() {
    let mut rng = rng_from_seed(11);
    for i in 0..150 {
        let n = 1 + i % 3;
        let m = 2 * (1 + (i as i64 / 3) % 4);
        let a = random_graded(&std(n), m, &mut rng);
        let b = random_graded(&std(n), m, &mut rng);
        assert_eq!(degree(&a, &b).unwrap(), degree_closed_form(&a, &b).unwrap(), "case {i}");
    }
}

#[test]
fn degree_over_a_point_is_the_deck_difference() {
    let pt = SymplecticSpace::point();
    let f = LagrangianFrame::new(&pt, Mat::zeros(0, 0)).unwrap();
    let a = grade(&f, 0, 6).unwrap();
    for c in 0..6 {
        assert_eq!(degree(&a, &shift(&a, c)).unwrap(), c);
    }
}

#[test]
fn degree_properties() {
    let mut rng = rng_from_seed(12);
    for i in 0..60 {
        let n = 1 + i % 3;
        let m = [2, 4, 6, 8][i % 4];
        let sp = std(n);
        let a = random_graded(&sp, m, &mut rng);
        let b = random_graded(&sp, m, &mut rng);
        let d = degree(&a, &b).unwrap();
        // skewsymmetry, both forms
        assert_eq!((d + degree(&b, &a).unwrap()).rem_euclid(m), n as i64 % m);
        assert_eq!((d + degree(&dual_graded(&a), &dual_graded(&b)).unwrap()).rem_euclid(m), n as i64 % m);
        // multiplicativity
        let c = (i as i64 * 5) % 11 - 5;
        assert_eq!(degree(&a, &shift(&b, c)).unwrap(), (c + d).rem_euclid(m));
        // additivity
        let n2 = 1 + (i / 3) % 2;
        let a2 = random_graded(&std(n2), m, &mut rng);
        let b2 = random_graded(&std(n2), m, &mut rng);
        let lhs = degree(&product_graded(&a, &a2).unwrap(), &product_graded(&b, &b2).unwrap()).unwrap();
        assert_eq!(lhs, (d + degree(&a2, &b2).unwrap()).rem_euclid(m));
        // diagonal
        let diag = canonical_diagonal(&sp, m).unwrap();
        let rhs = degree(&diag, &product_graded(&dual_graded(&a), &b).unwrap()).unwrap();
        assert_eq!(rhs, d, "case {i}");
    }
}

#[test]
fn dual_and_product_identities() {
    let mut rng = rng_from_seed(13);
    let a = random_graded(&std(2), 4, &mut rng);
    let dd = dual_graded(&dual_graded(&a));
    assert!(dd.same_point(&a, 1e-15));
    assert_eq!(dd.theta(), a.theta());
    let pt = grade(&LagrangianFrame::new(&SymplecticSpace::point(), Mat::zeros(0, 0)).unwrap(), 0, 4).unwrap();
    let p = product_graded(&a, &pt).unwrap();
    assert_eq!(p.theta(), a.theta());
    assert!(p.frame().distance(a.frame()) < 1e-15);
    // the phase anchor survives duals and products
    let b = random_graded(&std(1), 4, &mut rng);
    for g in [dual_graded(&a), product_graded(&a, &b).unwrap(), product_graded(&dual_graded(&b), &a).unwrap()] {
        assert!(GradedLagrangian::new(g.frame().clone(), g.theta(), 4).is_ok());
    }
}

#[test]
fn column_swap_flips_the_two_fold_class() {
    let mut rng = rng_from_seed(14);
    for n in 2..=4 {
        for _ in 0..10 {
            let f = random_lagrangian_rng(&std(n), &mut rng);
            let mut cols = f.cols().clone();
            let g0 = grade_oriented(&std(n), &cols, 2).unwrap();
            cols.swap_columns(0, 1);
            let g1 = grade_oriented(&std(n), &cols, 2).unwrap();
            let diff = (g1.theta() - g0.theta()).rem_euclid(2.0);
            assert!((diff - 1.0).abs() < 1e-9);
            assert!(g1.frame().distance(g0.frame()) < 1e-12);
            let neg = -f.cols().clone();
            let g2 = grade_oriented(&std(n), &neg, 2).unwrap();
            let diff = (g2.theta() - g0.theta() - (n % 2) as f64).rem_euclid(2.0);
            assert!(diff < 1e-9 || diff > 2.0 - 1e-9);
        }
    }
}

#[test]
fn canonical_diagonal_is_independent_of_the_auxiliary_lagrangian() {
    let mut rng = rng_from_seed(15);
    for n in 1..=3 {
        let sp = std(n);
        let base = canonical_diagonal(&sp, 8).unwrap();
        // det² of the diagonal in standard coordinates of V⁻ × V is (−1)^n
        assert!((base.theta() + n as f64 / 2.0).abs() < 1e-9);
        for _ in 0..5 {
            let aux = random_lagrangian_rng(&sp, &mut rng);
            let other = canonical_diagonal_with(&aux, 8).unwrap();
            assert!((other.theta() - base.theta()).abs() < 1e-6);
        }
    }
    let s = random_symplectic(2, &mut rng, 1.0);
    let form = s.transpose() * standard_form(2) * &s;
    let sp = SymplecticSpace::from_form(form).unwrap();
    let a = canonical_diagonal(&sp, 4).unwrap();
    let b = canonical_diagonal_with(&random_lagrangian_rng(&sp, &mut rng), 4).unwrap();
    assert!((a.theta() - b.theta()).abs() < 1e-6);
}

#[test]
fn normalized_complement_has_degree_zero() {
    for n in 1..=3 {
        let g = complement_grading(&std(n), 6).unwrap();
        let diag = dual_graded(&canonical_diagonal(&std(n), 6).unwrap());
        assert_eq!(degree_closed_form(&g, &diag).unwrap(), 0);
        assert_eq!(degree(&g, &diag).unwrap(), 0);
    }
}

fn graded_symp(n: usize, seed: u64, steps: usize) -> GradedSymplectic {
    let mut rng = rng_from_seed(seed);
    let h = Mat::from_fn(2 * n, 2 * n, |_, _| rand::Rng::random::<f64>(&mut rng) - 0.5);
    GradedSymplectic::from_hamiltonian(&linalg::symmetrize(&h), steps, 4).unwrap()
}

#[test]
fn identity_grades_to_the_canonical_diagonal() {
    for n in 1..=3 {
        let id = GradedSymplectic::identity(&std(n), 4).unwrap();
        let g = graph_grading(&id).unwrap();
        let d = canonical_diagonal(&std(n), 4).unwrap();
        assert!(g.same_point(&d, 1e-12));
        assert_eq!(g.theta(), d.theta());
    }
}

#[test]
fn full_symplectic_loop_shifts_by_its_maslov_class() {
    let n = 2;
    let sp = std(n);
    for turns in 1..=2i64 {
        let path = GradedSymplectic::from_fn(
            &sp,
            |t| {
                let mut u = nalgebra::DMatrix::<num_complex::Complex64>::identity(n, n);
                u[(0, 0)] = num_complex::Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * turns as f64 * t);
                unitary_as_real(&u)
            },
            64 * turns as usize,
            2,
        )
        .unwrap();
        let g = graph_grading(&path).unwrap();
        let d = canonical_diagonal(&sp, 2).unwrap();
        let shift = g.theta() - d.theta();
        assert!((shift - 2.0 * turns as f64).abs() < 1e-9, "{shift}");
        assert_eq!((shift.round() as i64).rem_euclid(2), 0);
    }
}

#[test]
fn graded_graphs_compose_like_their_paths() {
    for n in 1..=2 {
        let a = graded_symp(n, 20 + n as u64, 32);
        let b = graded_symp(n, 30 + n as u64, 32);
        let ab = compose_graded(&graded_graph(&a).unwrap(), &graded_graph(&b).unwrap()).unwrap();
        let direct = graph_grading(&a.then(&b).unwrap()).unwrap();
        assert!(ab.graded().frame().distance(direct.frame()) < 1e-8);
        let diff = ab.graded().theta() - direct.theta();
        assert!((diff / 4.0 - (diff / 4.0).round()).abs() < 1e-9, "n = {n}: {diff}");
    }
}

#[test]
fn composing_with_the_graded_diagonal_keeps_the_grading() {
    let mut rng = rng_from_seed(16);
    for i in 0..20 {
        let (n0, n1) = (i % 3, 1 + i % 2);
        let c = random_graded_corr(&std(n0), &std(n1), 6, &mut rng);
        let d1 = GradedCorrespondence::new(corrlin::diagonal(&std(n1)), canonical_diagonal(&std(n1), 6).unwrap()).unwrap();
        let d0 = GradedCorrespondence::new(corrlin::diagonal(&std(n0)), canonical_diagonal(&std(n0), 6).unwrap()).unwrap();
        let r = compose_graded(&c, &d1).unwrap();
        let l = compose_graded(&d0, &c).unwrap();
        assert!(r.graded().same_point(c.graded(), 1e-8), "case {i}: {} vs {}", r.graded().theta(), c.graded().theta());
        assert!(l.graded().same_point(c.graded(), 1e-8), "case {i}");
    }
}

#[test]
fn degree_through_composition_equals_degree_through_triple() {
    let mut rng = rng_from_seed(17);
    for i in 0..40 {
        let (n0, n1, n2) = (i % 3, 1 + (i / 3) % 2, (i / 6) % 3);
        let m = [2, 4, 6, 8][i % 4];
        let (v0, v1, v2) = (std(n0), std(n1), std(n2));
        let l0 = random_graded(&v0, m, &mut rng);
        let l2 = random_graded(&v2.dual(), m, &mut rng);
        let l01 = random_graded_corr(&v0, &v1, m, &mut rng);
        let l12 = random_graded_corr(&v1, &v2, m, &mut rng);
        let (lhs, rhs) = composition_degrees(&l0, &l01, &l12, &l2).unwrap();
        assert_eq!(lhs, rhs, "case {i}");
    }
}

#[test]
fn non_embedded_composition_is_rejected() {
    let pt = SymplecticSpace::point();
    let lam = random_lagrangian(1, 3);
    let c = corrlin::LinearCorrespondence::new(&pt, &std(1), lam.cols().clone()).unwrap();
    let a = GradedCorrespondence::graded_from(&c, 0, 2).unwrap();
    let b = GradedCorrespondence::graded_from(&corrlin::transpose(&c), 0, 2).unwrap();
    assert!(matches!(compose_graded(&a, &b), Err(Error::NotEmbedded(_))));
}

#[test]
fn diagonal_insertion_identities() {
    let mut rng = rng_from_seed(18);
    for i in 0..30 {
        let (n0, n1, n2) = (i % 3, (i / 3) % 3, (i / 9) % 3);
        let m = [2, 4, 6, 8][i % 4];
        let (v0, v1, v2) = (std(n0), std(n1), std(n2));
        let l0 = random_graded(&v0, m, &mut rng);
        let l2 = random_graded(&v2.dual(), m, &mut rng);
        let l01 = random_graded_corr(&v0, &v1, m, &mut rng);
        let l12 = random_graded_corr(&v1, &v2, m, &mut rng);
        let (a, b) = insert_diagonal_a(&l0, &l01, &l12, &l2).unwrap();
        assert_eq!(a, b, "(a) case {i}");
        assert!(insert_diagonal_degree_check(&l0, &l01, &l12, &l2).unwrap());

        let (k0, k1) = (1 + i % 2, (i / 2) % 3);
        let (w0, w1) = (std(k0), std(k1));
        let lam = random_graded(&w0.dual().product(&w1).product(&w0), m, &mut rng);
        let k = random_graded(&w0.product(&w0.dual()).product(&w1), m, &mut rng);
        let (a, b) = insert_diagonal_b(&w0, &w1, &lam, &k).unwrap();
        assert_eq!(a, b, "(b) case {i}");
    }
}

#[test]
fn insertion_over_a_point_is_additivity() {
    let mut rng = rng_from_seed(19);
    let pt = SymplecticSpace::point();
    for _ in 0..10 {
        let (v0, v2) = (std(1), std(2));
        let l0 = random_graded(&v0, 4, &mut rng);
        let l2 = random_graded(&v2.dual(), 4, &mut rng);
        let l01 = random_graded_corr(&v0, &pt, 4, &mut rng);
        let l12 = random_graded_corr(&pt, &v2, 4, &mut rng);
        let (a, b) = insert_diagonal_a(&l0, &l01, &l12, &l2).unwrap();
        let sum = degree(&l0, &dual_graded(l01.graded())).unwrap() + degree(l12.graded(), &dual_graded(&l2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, sum.rem_euclid(4));
    }
}

#[test]
fn graded_json_round_trip() {
    let mut rng = rng_from_seed(21);
    let g = random_graded(&std(2), 6, &mut rng);
    let js = serde_json::to_value(GradedJson::from_graded(&g)).unwrap();
    assert_eq!(js["N"], 6);
    assert!(js.get("theta").is_some() && js.get("columns").is_some());
    let back: GradedJson = serde_json::from_value(js).unwrap();
    let h = back.to_graded().unwrap();
    assert!(h.same_point(&g, 1e-14));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn degree_is_independent_of_the_path(n in 1usize..4, m in 1i64..5, seed in any::<u64>()) {
        let m = 2 * m;
        let mut rng = rng_from_seed(seed);
        let a = random_graded(&std(n), m, &mut rng);
        let b = random_graded(&std(n), m, &mut rng);
        let d = degree(&a, &b).unwrap();
        for k in 1..=2 {
            let w: Vec<LagrangianFrame> = (0..k).map(|_| random_lagrangian_rng(&std(n), &mut rng)).collect();
            match degree_along(&a, &b, &w) {
                Ok(x) => prop_assert_eq!(x, d),
                Err(Error::IrregularCrossing { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn graded_composition_is_associative(n in prop::array::uniform4(0usize..2), seed in any::<u64>()) {
        let n = [n[0], n[1] + 1, n[2] + 1, n[3]];
        let mut rng = rng_from_seed(seed);
        let a = random_graded_corr(&std(n[0]), &std(n[1]), 4, &mut rng);
        let b = random_graded_corr(&std(n[1]), &std(n[2]), 4, &mut rng);
        let c = random_graded_corr(&std(n[2]), &std(n[3]), 4, &mut rng);
        let ab = corrlin::compose(a.corr(), b.corr()).unwrap();
        let bc = corrlin::compose(b.corr(), c.corr()).unwrap();
        prop_assume!(ab.margin > 1e-3 && bc.margin > 1e-3);
        let l = compose_graded(&compose_graded(&a, &b).unwrap(), &c).unwrap();
        let r = compose_graded(&a, &compose_graded(&b, &c).unwrap()).unwrap();
        prop_assert!(l.graded().same_point(r.graded(), 1e-7), "{} vs {}", l.graded().theta(), r.graded().theta());
    }

    #[test]
    fn graph_grading_respects_products_of_paths(seed in any::<u64>()) {
        let a = graded_symp(1, seed, 24);
        let b = graded_symp(1, seed.wrapping_add(1), 24);
        let ab = compose_graded(&graded_graph(&a).unwrap(), &graded_graph(&b).unwrap()).unwrap();
        let direct = graph_grading(&a.then(&b).unwrap()).unwrap();
        prop_assert!(ab.graded().same_point(&direct, 1e-8));
        let _ = graph(a.matrix(), &std(1)).unwrap();
    }
}
