use num_complex::Complex64;
use num_rational::Rational64;
use quiltlab::symplinalg::rng_from_seed;
use quiltlab::toric::*;
use quiltlab::Error;
use rand::Rng;
use std::f64::consts::PI;

fn q(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

#[test]
fn moments_of_simple_points() {
    let p = ProjectivePoint::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)]).unwrap();
    let m = p.moments();
    assert!((m[0] - PI / 2.0).abs() < 1e-15);
    assert!((m[1] - PI / 2.0).abs() < 1e-15);
    assert_eq!(m[2], 0.0);
    assert!(moment(&p, 3).is_err());
    let scaled = ProjectivePoint::new(vec![Complex64::new(0.0, 3.0), Complex64::new(-3.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
    assert!(p.distance(&scaled) < 1e-15);
    assert!(ProjectivePoint::new(vec![Complex64::new(0.0, 0.0); 3]).is_err());
}

#[test]
fn moments_sum_to_pi() {
    let mut rng = rng_from_seed(1);
    for n in 0..6 {
        for _ in 0..50 {
            let p = random_point(n, &mut rng);
            assert!((p.moments().iter().sum::<f64>() - PI).abs() < 1e-13);
        }
    }
}

#[test]
fn fubini_study_form_is_symplectic() {
    let mut rng = rng_from_seed(2);
    let sp = ProjSpace { n: 3, scale: q(3, 4) };
    for _ in 0..20 {
        let p = random_point(3, &mut rng);
        let w = sp.form_at(&p).unwrap();
        assert!((&w + w.transpose()).amax() < 1e-14);
        // det ω = c^{2m} / (1+|w|²)^{2m+2}
        let d = 1.0 + p.chart().unwrap().iter().map(|c| c.norm_sqr()).sum::<f64>();
        let expect = 0.75f64.powi(6) / d.powi(8);
        assert!((w.determinant() / expect - 1.0).abs() < 1e-9);
        assert!(sp.space_at(&p).is_ok());
    }
    // at the chart origin ω = scale·Σ dx∧dy
    let o = ProjectivePoint::from_chart(&[Complex64::new(0.0, 0.0); 3]);
    let w = sp.form_at(&o).unwrap();
    for i in 0..3 {
        assert!((w[(i, i + 3)] - 0.75).abs() < 1e-15);
    }
}

#[test]
fn clifford_membership_and_lagrangian() {
    let mut rng = rng_from_seed(3);
    for n in 1..=4 {
        let t = clifford(n);
        assert_eq!(t.dim(), n);
        for _ in 0..200 {
            let (x, z) = t.sample(&mut rng).unwrap();
            assert!(t.contains(&x, &z, 1e-12));
            for m in z.moments() {
                assert!((m - PI / (n as f64 + 1.0)).abs() < 1e-12);
            }
            assert!(t.lagrangian_residual(&x, &z).unwrap() < 1e-9);
        }
        let off = random_point(n, &mut rng);
        assert!(!t.contains(&ProjectivePoint::point(), &off, 1e-6));
    }
}

#[test]
fn sigma_dimensions_and_lagrangian_at_many_points() {
    let mut rng = rng_from_seed(4);
    let mut count = 0;
    for n in 2..=4 {
        for k in 2..=n {
            let s = sigma(k, n).unwrap();
            assert_eq!(s.dim(), k - 1 + n);
            for _ in 0..100 {
                let (x, z) = s.sample(&mut rng).unwrap();
                assert!(s.contains(&x, &z, 1e-12));
                for j in k..=n {
                    assert!((z.moment(j).unwrap() - PI / (n as f64 + 1.0)).abs() < 1e-12);
                }
                let r = s.lagrangian_residual(&x, &z).unwrap();
                assert!(r < 1e-9, "Σ_({k}..{n}) residual {r:e}");
                let tan = s.tangent(&x, &z).unwrap();
                assert_eq!(tan.dims(), (k - 1, n));
                count += 1;
            }
        }
        for j in 1..=n {
            let s = sigma_j(j, n).unwrap();
            for _ in 0..50 {
                let (x, z) = s.sample(&mut rng).unwrap();
                assert!(s.lagrangian_residual(&x, &z).unwrap() < 1e-9);
            }
        }
    }
    assert_eq!(count, 600);
    assert!(sigma(1, 3).is_err());
    assert!(sigma(4, 3).is_err());
}

#[test]
fn sigma_fails_at_the_wrong_scale() {
    // the reduced form must be k/(n+1) times the standard one
    let mut rng = rng_from_seed(5);
    let mut s = sigma(2, 3).unwrap();
    s.source.scale = q(1, 1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (x, z) = s.sample(&mut rng).unwrap();
        worst = worst.max(s.lagrangian_residual(&x, &z).unwrap());
    }
    assert!(worst > 1e-3);
}

#[test]
fn reduced_spaces_share_the_monotonicity_constant() {
    for n in 2..=6 {
        let r = tau_report(n).unwrap();
        assert_eq!(r.ambient, q(1, n as i64 + 1));
        assert_eq!(r.reduced.len(), n - 1);
        for red in &r.reduced {
            assert_eq!(red.scale, q(red.k as i64, n as i64 + 1));
            assert_eq!(red.tau, q(1, n as i64 + 1));
        }
        assert!(r.consistent);
    }
    assert!(reduced_space_scale(1, 3).is_ok());
    assert!(reduced_space_scale(4, 3).is_err());
}

#[test]
fn three_compositions_are_embedded() {
    for n in 2..=4 {
        let s = sigma(2, n).unwrap();
        let s1 = sigma_j(1, n).unwrap();
        let t1 = clifford_in(s.source);
        let tn1 = clifford_in(s1.source);

        let c = compose_toric(&t1, &s, 40, 10).unwrap();
        assert!(c.embedded, "{:?}", c.witness);
        assert!(c.composed.same_set(&clifford(n)).unwrap());
        assert!(c.min_margin > 1e-6);
        assert!(c.max_lagrangian_residual < 1e-9);

        let c = compose_toric(&s1.transpose(), &tn1.transpose(), 40, 11).unwrap();
        assert!(c.embedded, "{:?}", c.witness);
        assert!(c.composed.same_set(&clifford(n).transpose()).unwrap());

        let c = compose_toric(&s, &s1.transpose(), 40, 12).unwrap();
        assert!(c.embedded, "{:?}", c.witness);
        assert!(c.composed.same_set(&split_product(&t1, &tn1).unwrap()).unwrap());
        assert!(c.composed.is_split());
    }
}

#[test]
fn general_reduction_composes_to_clifford() {
    for n in 2..=4 {
        for k in 2..=n {
            let s = sigma(k, n).unwrap();
            let c = compose_toric(&clifford_in(s.source), &s, 20, k as u64).unwrap();
            assert!(c.embedded);
            assert!(c.composed.same_set(&clifford(n)).unwrap());
        }
    }
}

#[test]
fn clifford_pair_with_itself_is_not_embedded() {
    // T ∘ Tᵗ : pt → pt has an n-dimensional fiber
    let t = clifford(2);
    let c = compose_toric(&t, &t.transpose(), 5, 0).unwrap();
    assert!(!c.embedded);
    assert!(c.witness.is_some());
    assert_eq!(c.fiber_dim, 2);
}

#[test]
fn mismatched_composition_is_rejected() {
    let s = sigma(2, 3).unwrap();
    assert!(matches!(compose_toric(&clifford(1), &s, 5, 0), Err(Error::SpaceMismatch(_))));
}

#[test]
fn perturbed_clifford_generators() {
    let g = perturbed_generators(1, None).unwrap();
    assert_eq!(g.len(), 2);
    let mut d: Vec<i64> = g.iter().map(|x| x.degree).collect();
    d.sort();
    assert_eq!(d, vec![0, 1]);

    let g = perturbed_generators(3, None).unwrap();
    assert_eq!(g.len(), 8);
    let mut by_index = [0usize; 4];
    for x in &g {
        by_index[x.index] += 1;
    }
    assert_eq!(by_index, [1, 3, 3, 1]);
    assert_eq!(g.iter().filter(|x| x.degree == 0).count(), 4);
}

#[test]
fn generator_count_is_independent_of_the_morse_function() {
    let mut rng = rng_from_seed(6);
    for _ in 0..10 {
        let terms: Vec<Vec<CosTerm>> = (0..2)
            .map(|_| vec![CosTerm { amplitude: rng.random_range(0.5..2.0), frequency: 1, phase: rng.random::<f64>() }])
            .collect();
        let f = MorseFunction { terms };
        let g = perturbed_generators(2, Some(&f)).unwrap();
        assert_eq!(g.len(), 4);
    }
}

#[test]
fn zero_differential_rank() {
    for n in 1..=4 {
        let g = perturbed_generators(n, None).unwrap();
        let c = zero_complex(&g).unwrap();
        let h = quiltlab::quilt::homology(&c).unwrap();
        assert_eq!(h.total_rank(), 1 << n);
        assert_eq!(h.groups[0].betti, 1 << (n - 1));
    }
}

#[test]
fn degenerate_morse_function_is_reported() {
    let flat = MorseFunction { terms: vec![vec![CosTerm { amplitude: 0.0, frequency: 1, phase: 0.0 }]; 2] };
    assert!(matches!(perturbed_generators(2, Some(&flat)), Err(Error::NotTransverse(_))));
    // cos + cos(2·) /4 has a degenerate critical point at θ = 1/2
    let cusp = MorseFunction {
        terms: vec![vec![
            CosTerm { amplitude: 1.0, frequency: 1, phase: 0.0 },
            CosTerm { amplitude: 0.25, frequency: 2, phase: 0.0 },
        ]],
    };
    assert!(matches!(perturbed_generators(1, Some(&cusp)), Err(Error::NotTransverse(_))));
    assert!(perturbed_generators(2, Some(&MorseFunction::standard(3))).is_err());
}

#[test]
fn calc_chain_small_n() {
    for n in 2..=3 {
        let r = calc_chain(n, 30, 7).unwrap();
        assert!(r.consistent, "{:#?}", r.bijections);
        assert_eq!(r.steps.len(), 6);
        for s in &r.steps[..4] {
            assert_eq!(s.count, 1 << n);
            assert_eq!(s.degree_counts, vec![1 << (n - 1), 1 << (n - 1)]);
        }
        assert_eq!(r.tensor_factors, (2, 1 << (n - 1)));
        assert!(r.compositions.iter().all(|c| c.embedded && c.identified));
        assert!(serde_json::to_string(&r).is_ok());
    }
    assert!(calc_chain(1, 5, 0).is_err());
}

#[test]
fn sphere_sequences_have_matching_generators() {
    for n in 2..=4 {
        for k in 2..=n {
            let (quilt, pair) = sphere_sequences(k, n).unwrap();
            let a = quilt.generators(None).unwrap();
            let b = pair.generators(None).unwrap();
            assert_eq!(a.len(), 1 << n);
            assert_eq!(b.len(), 1 << n);
            let (composed, _) = quilt.compose_at(1, 10, 3).unwrap();
            let c = composed.generators(None).unwrap();
            let map = generator_bijection(&a, &c, |p| vec![p[0].clone(), p[2].clone()]).unwrap();
            for (i, &j) in map.iter().enumerate() {
                assert_eq!(a[i].degree, c[j].degree);
            }
        }
    }
}

#[test]
fn tau_mismatch_is_rejected() {
    let t = clifford(2);
    let r = ToricSequence::new(vec![ProjSpace::point(), t.target], vec![t.clone(), t.transpose()], Some(q(1, 4)));
    assert!(r.is_err());
}

#[test]
fn json_roundtrip() {
    let (quilt, _) = sphere_sequences(2, 3).unwrap();
    let j = serde_json::to_string(&ToricSequenceJson::from_sequence(&quilt)).unwrap();
    assert!(j.contains("\"2/4\"") || j.contains("\"1/2\""));
    let back: ToricSequenceJson = serde_json::from_str(&j).unwrap();
    assert_eq!(back.to_sequence().unwrap(), quilt);

    let bad = j.replace("\"1/4\"", "\"3/4\"");
    let back: ToricSequenceJson = serde_json::from_str(&bad).unwrap();
    let e = back.to_sequence().unwrap_err().to_string();
    assert!(e.contains("/correspondences"), "{e}");
}

#[test]
fn clifford_angles_parametrize_bijectively() {
    let mut rng = rng_from_seed(8);
    for n in 1..=4 {
        let t = clifford(n);
        for _ in 0..100 {
            let theta: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let p = clifford_point(&theta);
            assert!(t.contains(&ProjectivePoint::point(), &p, 1e-12));
            for (a, b) in p.phases().unwrap().iter().zip(&theta) {
                let d = (a - b).rem_euclid(1.0);
                assert!(d.min(1.0 - d) < 1e-12);
            }
        }
    }
    // n = 1: the equator of CP^1
    let p = clifford_point(&[0.25]);
    assert!((p.moment(0).unwrap() - PI / 2.0).abs() < 1e-15);
}

#[test]
fn clifford_index_counts_are_binomial() {
    for n in 1..=4usize {
        let g = perturbed_generators(n, None).unwrap();
        assert_eq!(g.len(), 1 << n);
        for k in 0..=n {
            let binom = (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
            assert_eq!(g.iter().filter(|x| x.index == k).count(), binom);
        }
    }
}

#[test]
fn moment_levels_are_exact() {
    for n in 1..=6usize {
        let third = q(1, n as i64 + 1);
        let (_, t) = clifford(n).moment_levels().unwrap();
        assert_eq!(t.len(), n + 1);
        assert!(t.iter().all(|&(_, v)| v == third));
        for k in 2..=n {
            let (src, tgt) = sigma(k, n).unwrap().moment_levels().unwrap();
            assert!(src.is_empty());
            assert_eq!(tgt.iter().filter(|&&(j, _)| j >= k).count(), n + 1 - k);
            assert!(tgt.iter().filter(|&&(j, _)| j >= k).all(|&(_, v)| v == third));
        }
    }
}
