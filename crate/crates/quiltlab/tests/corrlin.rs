use proptest::prelude::*;
use quiltlab::corrlin::*;
use quiltlab::linalg::{self, Mat};
use quiltlab::symplinalg::*;

fn std(n: usize) -> SymplecticSpace {
    standard_space(n)
}

#[test]
fn transpose_of_graph_is_graph_of_inverse() {
    let mut rng = rng_from_seed(1);
    for n in 1..=3 {
        let s = random_symplectic(n, &mut rng, 1.0);
        let g = graph(&s, &std(n)).unwrap();
        let inv = graph(&s.clone().try_inverse().unwrap(), &std(n)).unwrap();
        assert!(transpose(&g).distance(&inv) < 1e-9);
        assert!(transpose(&transpose(&g)).distance(&g) < 1e-15);
    }
    let d = diagonal(&std(2));
    assert!(transpose(&d).distance(&d) < 1e-15);
}

#[test]
fn graph_checks_symplecticity() {
    let sp = std(2);
    let g = graph(&standard_j(2), &sp).unwrap();
    assert!(g.lag().isotropy_residual() < 1e-12);
    let mut bad = Mat::identity(4, 4);
    bad[(0, 0)] = 2.0;
    assert!(matches!(graph(&bad, &sp), Err(quiltlab::Error::NotSymplectic(_))));
    let mut rng = rng_from_seed(5);
    for _ in 0..20 {
        let h = Mat::from_fn(4, 4, |_, _| rand::Rng::random::<f64>(&mut rng) - 0.5);
        let s = symplectic_exp(&h);
        assert!(symplectic_residual(&s, &sp) < 1e-10);
        assert!(graph(&s, &sp).is_ok());
    }
}

#[test]
fn composition_of_graphs() {
    let mut rng = rng_from_seed(2);
    for n in 1..=4 {
        let a = random_symplectic(n, &mut rng, 1.0);
        let b = random_symplectic(n, &mut rng, 1.0);
        let r = compose(&graph(&a, &std(n)).unwrap(), &graph(&b, &std(n)).unwrap()).unwrap();
        let ba = graph(&(&b * &a), &std(n)).unwrap();
        assert!(r.composed.distance(&ba) < 1e-8);
        assert!(r.transverse);
        assert_eq!(r.defect, 0);
        assert_eq!(r.kernel.dim(), 0);
        assert_eq!(r.fiber.dim(), 2 * n);
    }
}

#[test]
fn diagonal_is_a_unit() {
    let mut rng = rng_from_seed(3);
    for i in 0..200 {
        let (n0, n1) = (i % 3, 1 + (i / 3) % 3);
        let c = random_correspondence(&std(n0), &std(n1), &mut rng);
        let left = compose(&diagonal(&std(n0)), &c).unwrap();
        let right = compose(&c, &diagonal(&std(n1))).unwrap();
        assert!(left.composed.distance(&c) < 1e-8);
        assert!(right.composed.distance(&c) < 1e-8);
        assert!(left.transverse && right.transverse);
    }
}

#[test]
fn lagrangian_against_its_transpose_through_a_point() {
    for n in 1..=4 {
        let pt = SymplecticSpace::point();
        let lam = random_lagrangian(n, 7 + n as u64);
        let c01 = LinearCorrespondence::new(&pt, &std(n), lam.cols().clone()).unwrap();
        let c12 = transpose(&c01);
        let r = compose(&c01, &c12).unwrap();
        assert_eq!(r.kernel.dim(), n);
        assert_eq!(r.defect, n);
        assert!(!r.transverse);
        assert!(subspace_distance(&r.kernel, &lam.as_subspace()).unwrap() < 1e-9);
        assert!(!is_embedded_linear(&c01, &c12));
        assert_eq!(r.composed.lag().cols().ncols(), 0);
    }
}

#[test]
fn embeddedness_examples() {
    let mut rng = rng_from_seed(4);
    let a = random_symplectic(2, &mut rng, 1.0);
    let b = random_symplectic(2, &mut rng, 1.0);
    assert!(is_embedded_linear(&graph(&a, &std(2)).unwrap(), &graph(&b, &std(2)).unwrap()));
    for _ in 0..100 {
        let c01 = random_correspondence(&std(2), &std(2), &mut rng);
        let c12 = random_correspondence(&std(2), &std(2), &mut rng);
        assert!(is_embedded_linear(&c01, &c12));
        assert_eq!(compose(&c01, &c12).unwrap().kernel.dim(), 0);
    }
}

#[test]
fn space_mismatch_is_reported() {
    let mut rng = rng_from_seed(6);
    let c01 = random_correspondence(&std(1), &std(2), &mut rng);
    let c12 = random_correspondence(&std(1), &std(1), &mut rng);
    assert!(matches!(compose(&c01, &c12), Err(quiltlab::Error::SpaceMismatch(_))));
}

#[test]
fn kernel_dimension_equals_defect_over_many_pairs() {
    let mut rng = rng_from_seed(8);
    for i in 0..1000usize {
        let n = (i % 3, 1 + (i / 3) % 3, (i / 9) % 3);
        let k = i % (n.1 + 1);
        let (c01, c12) = random_degenerate_pair(n, k, &mut rng).unwrap();
        let r = compose(&c01, &c12).unwrap();
        assert_eq!(r.kernel.dim(), r.defect, "case {i}");
        assert_eq!(r.transverse, r.defect == 0, "case {i}");
        assert_eq!(r.defect, k, "case {i}");
        assert!(r.composed.lag().isotropy_residual() < 1e-9);
    }
}

#[test]
fn contraction_endpoints_on_graphs() {
    let mut rng = rng_from_seed(9);
    for n in 1..=3 {
        let sp = std(n);
        let a = graph(&random_symplectic(n, &mut rng, 1.0), &sp).unwrap();
        let b = graph(&random_symplectic(n, &mut rng, 1.0), &sp).unwrap();
        let lam = product_fiber(&a, &b).unwrap();
        let dims = (n, n, n);
        let r0 = contract_fiber(&lam, dims, 0.0).unwrap();
        assert_eq!(r0.cols(), lam.cols());
        let r1 = contract_fiber(&lam, dims, 1.0).unwrap();
        let c02 = compose(&a, &b).unwrap().composed;
        let split = split_lagrangian(&c02, &sp).unwrap();
        assert!(r1.distance(&split) < 1e-9);
    }
}

#[test]
fn contraction_keeps_composition_fixed() {
    let mut rng = rng_from_seed(10);
    let mut done = 0;
    while done < 100 {
        let n = (done % 3, 1 + done % 2, (done + 1) % 3);
        let fs = fiber_space(&std(n.0), &std(n.1), &std(n.2));
        let lam = random_lagrangian_rng(&fs, &mut rng);
        let Ok(c02) = compose_fiber(&lam, &std(n.0), &std(n.1), &std(n.2)) else { continue };
        for &t in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            let rt = contract_fiber(&lam, n, t).unwrap();
            assert!(rt.isotropy_residual() < 1e-9);
            let ct = compose_fiber(&rt, &std(n.0), &std(n.1), &std(n.2)).unwrap();
            assert!(ct.distance(&c02) < 1e-8, "t = {t}");
        }
        done += 1;
    }
}

#[test]
fn contraction_rejects_non_transverse_input() {
    let pt = SymplecticSpace::point();
    let lam = random_lagrangian(1, 1);
    let c01 = LinearCorrespondence::new(&pt, &std(1), lam.cols().clone()).unwrap();
    let prod = product_fiber(&c01, &transpose(&c01)).unwrap();
    assert!(matches!(contract_fiber(&prod, (0, 1, 0), 0.5), Err(quiltlab::Error::NotTransverse(_))));
}

#[test]
fn json_round_trip() {
    let mut rng = rng_from_seed(12);
    let c = random_correspondence(&std(1), &std(2), &mut rng);
    let js = serde_json::to_string(&CorrespondenceJson::from_corr(&c)).unwrap();
    let back: CorrespondenceJson = serde_json::from_str(&js).unwrap();
    assert!(back.to_corr().unwrap().distance(&c) < 1e-14);
    let r = compose(&c, &random_correspondence(&std(2), &std(1), &mut rng)).unwrap();
    let v = serde_json::to_value(CompositionReportJson::from_report(&r)).unwrap();
    for key in ["fiber", "transverse", "kernel", "defect", "composed"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

fn corr(n0: usize, n1: usize, seed: u64) -> LinearCorrespondence {
    let mut rng = rng_from_seed(seed);
    random_correspondence(&std(n0), &std(n1), &mut rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn composition_is_associative(n in prop::array::uniform4(0usize..3), seed in any::<u64>()) {
        let n = [n[0], n[1] + 1, n[2] + 1, n[3]];
        let a = corr(n[0], n[1], seed);
        let b = corr(n[1], n[2], seed.wrapping_add(1));
        let c = corr(n[2], n[3], seed.wrapping_add(2));
        let ab = compose(&a, &b).unwrap();
        let bc = compose(&b, &c).unwrap();
        let l = compose(&ab.composed, &c).unwrap();
        let r = compose(&a, &bc.composed).unwrap();
        prop_assume!(ab.margin > 1e-3 && bc.margin > 1e-3 && l.margin > 1e-3 && r.margin > 1e-3);
        prop_assert!(l.composed.distance(&r.composed) < 1e-8);
    }

    #[test]
    fn transpose_reverses_composition(n0 in 0usize..3, n1 in 1usize..4, n2 in 0usize..3, seed in any::<u64>()) {
        let a = corr(n0, n1, seed);
        let b = corr(n1, n2, seed.wrapping_add(7));
        let ab = compose(&a, &b).unwrap();
        prop_assume!(ab.margin > 1e-3);
        let ba = compose(&transpose(&b), &transpose(&a)).unwrap();
        prop_assert!(transpose(&ab.composed).distance(&ba.composed) < 1e-8);
    }

    #[test]
    fn composed_is_always_lagrangian(n0 in 0usize..3, n1 in 1usize..4, n2 in 0usize..3, k in 0usize..4, seed in any::<u64>()) {
        let k = k.min(n1);
        let mut rng = rng_from_seed(seed);
        let (a, b) = random_degenerate_pair((n0, n1, n2), k, &mut rng).unwrap();
        let r = compose(&a, &b).unwrap();
        prop_assert!(r.composed.lag().isotropy_residual() < 1e-9);
        prop_assert_eq!(r.kernel.dim(), r.defect);
        prop_assert_eq!(r.fiber.dim(), n0 + n2 + r.defect);
        let g = r.composed.lag().cols().transpose() * r.composed.lag().cols();
        prop_assert!(linalg::max_abs(&(g - Mat::identity(n0 + n2, n0 + n2))) < 1e-10);
    }
}
