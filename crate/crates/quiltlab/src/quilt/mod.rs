//! Cyclic generalized Lagrangian correspondences between lattice tori: generalized
//! intersection points, their degrees, folding, insertion of diagonals, composition and the
//! Künneth splitting.
//!
//! Perturbations are translations x_j ↦ x_j + p_j applied before each correspondence, so a
//! generator is a tuple with (x_j + p_j, x_{j+1}) ∈ L_{j(j+1)}. Widths are carried along but do
//! not enter any computation. All tangent data of affine subtori is translation invariant, so
//! the three degree formulas do not depend on the generator.

pub mod complex;
pub mod torus;

pub use complex::*;
pub use torus::*;

use crate::corrlin;
use crate::error::{Error, Result};
use crate::grading::{
    self, canonical_diagonal, compose_graded, degree, dual_graded, principal_theta, product_graded, transpose_graded,
    GradedCorrespondence, GradedLagrangian,
};
use crate::intlin::{self, Congruence, IMat};
use crate::linalg::{self, Mat};
use crate::maslov::LagrangianPath;
use crate::symplinalg::{self, standard_j, LagrangianFrame, SymplecticSpace};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tolerance for matching conditions mod Z.
pub const POINT_TOL: f64 = 1e-8;
/// Largest generator set that is enumerated.
pub const GENERATOR_LIMIT: usize = 1 << 14;

/// A lattice correspondence with the lift θ = (principal value) + shift.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedLattice {
    corr: LatticeCorrespondence,
    shift: i64,
}

impl GradedLattice {
    pub fn new(corr: LatticeCorrespondence, shift: i64) -> Self {
        GradedLattice { corr, shift }
    }

    /// The lattice correspondence carrying a given lift of its tangent space.
    pub fn from_theta(corr: LatticeCorrespondence, theta: f64) -> Result<Self> {
        let p = principal_theta(corr.tangent()?.lag());
        let k = theta - p;
        if intlin::dist_to_int(k) > 1e-6 {
            return Err(Error::BadGrading(format!("θ = {theta} is not a lift of the subtorus tangent space")));
        }
        Ok(GradedLattice { corr, shift: k.round() as i64 })
    }

    pub fn corr(&self) -> &LatticeCorrespondence {
        &self.corr
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn graded(&self, modulus: i64) -> Result<GradedCorrespondence> {
        GradedCorrespondence::graded_from(&self.corr.tangent()?, self.shift, modulus)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CyclicSequence {
    manifolds: Vec<Torus>,
    correspondences: Vec<GradedLattice>,
    widths: Vec<f64>,
    perturbations: Vec<Vec<f64>>,
    modulus: i64,
    monotonicity: f64,
}

impl CyclicSequence {
    /// L_{j(j+1)} ⊂ M_j⁻ × M_{j+1} for j = 0..r with M_{r+1} = M_0.
    pub fn new(
        manifolds: Vec<Torus>,
        correspondences: Vec<GradedLattice>,
        widths: Vec<f64>,
        perturbations: Vec<Vec<f64>>,
        modulus: i64,
    ) -> Result<Self> {
        if modulus <= 0 || modulus % 2 != 0 {
            return Err(Error::InvalidModulus(modulus));
        }
        let len = manifolds.len();
        if len == 0 {
            return Err(Error::Invalid("a cyclic sequence needs at least one manifold".into()));
        }
        if correspondences.len() != len {
            return Err(Error::Invalid(format!("{} correspondences for {len} manifolds", correspondences.len())));
        }
        if widths.len() != len || widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Invalid("widths must be one positive number per correspondence".into()));
        }
        if perturbations.len() != len {
            return Err(Error::Invalid("one perturbation per manifold".into()));
        }
        for (j, c) in correspondences.iter().enumerate() {
            if c.corr.source() != &manifolds[j] || c.corr.target() != &manifolds[(j + 1) % len] {
                return Err(Error::SpaceMismatch(format!("correspondence {j} does not run from M_{j} to M_{}", (j + 1) % len)));
            }
        }
        for (j, p) in perturbations.iter().enumerate() {
            if p.len() != manifolds[j].dim() || p.iter().any(|x| !x.is_finite()) {
                return Err(Error::DimensionMismatch(format!("perturbation {j} must have length {}", manifolds[j].dim())));
            }
        }
        Ok(CyclicSequence { manifolds, correspondences, widths, perturbations, modulus, monotonicity: 0.0 })
    }

    /// Unit widths and no perturbation.
    pub fn unperturbed(manifolds: Vec<Torus>, correspondences: Vec<GradedLattice>, modulus: i64) -> Result<Self> {
        let len = manifolds.len();
        let perturbations = manifolds.iter().map(|m| vec![0.0; m.dim()]).collect();
        Self::new(manifolds, correspondences, vec![1.0; len], perturbations, modulus)
    }

    pub fn len(&self) -> usize {
        self.manifolds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifolds.is_empty()
    }

    pub fn manifolds(&self) -> &[Torus] {
        &self.manifolds
    }

    pub fn correspondences(&self) -> &[GradedLattice] {
        &self.correspondences
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn perturbations(&self) -> &[Vec<f64>] {
        &self.perturbations
    }

    pub fn modulus(&self) -> i64 {
        self.modulus
    }

    /// Declared monotonicity constant; lattice tori are exact.
    pub fn monotonicity(&self) -> f64 {
        self.monotonicity
    }

    pub fn with_widths(&self, widths: Vec<f64>) -> Result<Self> {
        Self::new(self.manifolds.clone(), self.correspondences.clone(), widths, self.perturbations.clone(), self.modulus)
    }

    pub fn with_perturbations(&self, perturbations: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.manifolds.clone(), self.correspondences.clone(), self.widths.clone(), perturbations, self.modulus)
    }

    /// The same generator set with the perturbations moved into the correspondences.
    pub fn absorbed(&self) -> Self {
        let correspondences = self
            .correspondences
            .iter()
            .zip(&self.perturbations)
            .map(|(c, p)| GradedLattice { corr: c.corr.shift_source(p), shift: c.shift })
            .collect();
        let perturbations = self.manifolds.iter().map(|m| vec![0.0; m.dim()]).collect();
        CyclicSequence { correspondences, perturbations, ..self.clone() }
    }

    pub fn graded_tangents(&self) -> Result<Vec<GradedCorrespondence>> {
        self.correspondences.iter().map(|c| c.graded(self.modulus)).collect()
    }

    fn spaces(&self) -> Vec<SymplecticSpace> {
        self.manifolds.iter().map(Torus::space).collect()
    }
}

/// A generalized intersection point (x_0, …, x_r) with its degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub points: Vec<Vec<f64>>,
    pub degree: i64,
}

fn offsets(sizes: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut acc = 0;
    let mut out = vec![0];
    for s in sizes {
        acc += s;
        out.push(acc);
    }
    out
}

/// Matching conditions B_{j−1} s_{j−1} − A_j s_j ≡ a_j − b_{j−1} (mod Z^{2n_j}) in the
/// subtorus parameters s_j, for the absorbed sequence. Returns (K, c, parameter offsets).
fn matching_system(seq: &CyclicSequence) -> (IMat, Vec<f64>, Vec<usize>) {
    let len = seq.len();
    let cs = &seq.correspondences;
    let par = offsets(cs.iter().map(|c| c.corr.lag().directions().ncols()));
    let eqs = offsets(seq.manifolds.iter().map(Torus::dim));
    let (rows, cols) = (eqs[len], par[len]);
    let mut k = IMat::zeros(rows, cols);
    let mut c = vec![0.0; rows];
    for j in 0..len {
        let prev = (j + len - 1) % len;
        let d = seq.manifolds[j].dim();
        let b = cs[prev].corr.target_rows();
        let a = cs[j].corr.source_rows();
        let kp = b.ncols();
        let ka = a.ncols();
        for r in 0..d {
            for q in 0..kp {
                k[(eqs[j] + r, par[prev] + q)] += b[(r, q)];
            }
            for q in 0..ka {
                k[(eqs[j] + r, par[j] + q)] -= a[(r, q)];
            }
            c[eqs[j] + r] = cs[j].corr.source_offset()[r] - cs[prev].corr.target_offset()[r];
        }
    }
    (k, c, par)
}

/// Jacobian of the matching conditions; the sequence is transverse exactly when it is
/// invertible.
pub fn matching_jacobian(seq: &CyclicSequence) -> IMat {
    matching_system(&seq.absorbed()).0
}

fn format_point(p: &[Vec<f64>]) -> String {
    let parts: Vec<String> = p
        .iter()
        .map(|x| format!("({})", x.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")))
        .collect();
    parts.join(" ")
}

/// All tuples with (x_j + p_j, x_{j+1}) ∈ L_{j(j+1)}, without degrees.
pub fn generator_points(seq: &CyclicSequence) -> Result<Vec<Vec<Vec<f64>>>> {
    let abs = seq.absorbed();
    let (k, c, par) = matching_system(&abs);
    let sols = match intlin::solve_congruence(&k, &c, 1e-9, GENERATOR_LIMIT)? {
        Congruence::Empty => return Ok(Vec::new()),
        Congruence::Finite(s) => s,
        Congruence::Degenerate { witness, dim } => {
            let pts = points_from_parameters(&abs, &witness, &par);
            return Err(Error::NotTransverse(format!(
                "degenerate generator {} on a {dim}-dimensional family of solutions",
                format_point(&pts)
            )));
        }
    };
    let mut out = Vec::with_capacity(sols.len());
    for s in sols {
        let pts = points_from_parameters(&abs, &s, &par);
        if !is_generator(seq, &pts, POINT_TOL) {
            return Err(Error::Invalid(format!("solution {} fails the matching conditions", format_point(&pts))));
        }
        out.push(pts);
    }
    Ok(out)
}

fn points_from_parameters(abs: &CyclicSequence, s: &[f64], par: &[usize]) -> Vec<Vec<f64>> {
    abs.correspondences
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let p = c.corr.lag().point(&s[par[j]..par[j + 1]]);
            reduce_point(&p[..c.corr.source().dim()])
        })
        .collect()
}

/// The matching conditions (x_j + p_j, x_{j+1}) ∈ L_{j(j+1)}.
pub fn is_generator(seq: &CyclicSequence, points: &[Vec<f64>], tol: f64) -> bool {
    let len = seq.len();
    points.len() == len
        && points.iter().zip(&seq.manifolds).all(|(p, m)| p.len() == m.dim())
        && (0..len).all(|j| {
            let x: Vec<f64> = points[j].iter().zip(&seq.perturbations[j]).map(|(a, b)| a + b).collect();
            seq.correspondences[j].corr.contains(&x, &points[(j + 1) % len], tol)
        })
}

/// Generalized intersection points with their degrees.
pub fn intersection_points(seq: &CyclicSequence) -> Result<Vec<Generator>> {
    let pts = generator_points(seq)?;
    if pts.is_empty() {
        return Ok(Vec::new());
    }
    let d = sequence_degree(seq)?;
    Ok(pts.into_iter().map(|points| Generator { points, degree: d }).collect())
}

/// Distance between points of a torus.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| intlin::dist_to_int(x - y)).fold(0.0, f64::max)
}

fn tuple_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| if x.len() == y.len() { torus_distance(x, y) } else { f64::INFINITY }).fold(0.0, f64::max)
}

/// Index of `p` in `list`, if present.
pub fn find_tuple(list: &[Vec<Vec<f64>>], p: &[Vec<f64>]) -> Option<usize> {
    list.iter().position(|q| tuple_distance(q, p) < 1e-7)
}

/// Images of `from` under `f` located in `to`; fails unless this is a bijection.
fn bijection<F: Fn(&[Vec<f64>]) -> Vec<Vec<f64>>>(from: &[Vec<Vec<f64>>], to: &[Vec<Vec<f64>>], f: F) -> Result<Vec<usize>> {
    if from.len() != to.len() {
        return Err(Error::Invalid(format!("generator counts differ: {} vs {}", from.len(), to.len())));
    }
    let mut hit = vec![false; to.len()];
    let mut map = Vec::with_capacity(from.len());
    for p in from {
        let img = f(p);
        let i = find_tuple(to, &img).ok_or_else(|| Error::Invalid(format!("image {} is not a generator", format_point(&img))))?;
        if std::mem::replace(&mut hit[i], true) {
            return Err(Error::Invalid(format!("two generators map to {}", format_point(&img))));
        }
        map.push(i);
    }
    Ok(map)
}

fn checked_generator(seq: &CyclicSequence, gen: &Generator) -> Result<()> {
    if !is_generator(seq, &gen.points, POINT_TOL) {
        return Err(Error::Invalid(format!("{} is not a generalized intersection point", format_point(&gen.points))));
    }
    Ok(())
}

fn product_all(parts: Vec<GradedLagrangian>) -> Result<GradedLagrangian> {
    let mut it = parts.into_iter();
    let first = it.next().ok_or_else(|| Error::Invalid("empty product".into()))?;
    it.try_fold(first, |acc, g| product_graded(&acc, &g))
}

/// (Δ̃⁻_{M_0} × … × Δ̃⁻_{M_r})ᵀ over M_0⁻ × M_1 × M_1⁻ × … × M_r⁻ × M_0.
fn transposed_diagonal(seq: &CyclicSequence) -> Result<GradedLagrangian> {
    let sp = seq.spaces();
    let parts = sp.iter().map(|s| canonical_diagonal(s, seq.modulus).map(|d| dual_graded(&d))).collect::<Result<Vec<_>>>()?;
    let p = product_all(parts)?;
    let rest = sp[1..].iter().fold(sp[0].dual(), |acc, s| acc.product(&s.product(&s.dual())));
    transpose_graded(&p, &sp[0], &rest)
}

fn sequence_degree(seq: &CyclicSequence) -> Result<i64> {
    let l = product_all(seq.graded_tangents()?.iter().map(|g| g.graded().clone()).collect())?;
    degree(&l, &transposed_diagonal(seq)?)
}

/// |x| = d(σ_L(x), σ_{Δᵀ}(x)) for the product L = L_{01} × … × L_{r(r+1)}.
pub fn generator_degree(seq: &CyclicSequence, gen: &Generator) -> Result<i64> {
    checked_generator(seq, gen)?;
    sequence_degree(seq)
}

/// Path from `start` to `end` through Lagrangians transverse to `avoid`: straight lines in the
/// chart Λ = graph(S) over JΔ, S symmetric.
fn transverse_path(start: &LagrangianFrame, end: &LagrangianFrame, avoid: &LagrangianFrame) -> Result<LagrangianPath> {
    let sp = start.space().clone();
    let n = sp.n();
    if n == 0 {
        return Ok(LagrangianPath::constant(start));
    }
    let f = linalg::reorthonormalize(&avoid.std());
    let jf = standard_j(n) * &f;
    let chart = |g: &Mat| -> Result<Mat> {
        let p = jf.transpose() * g;
        let q = f.transpose() * g;
        let inv = p.try_inverse().ok_or_else(|| Error::NotTransverse("endpoint meets the diagonal".into()))?;
        Ok(linalg::symmetrize(&(q * inv)))
    };
    let s0 = chart(&start.std())?;
    let s1 = chart(&end.std())?;
    let from = sp.from_std().clone();
    Ok(LagrangianPath::new(&sp, move |t| &from * (&jf + &f * (&s0 * (1.0 - t) + &s1 * t))).with_resolution(64))
}

/// Random Λ' ⊂ V and Λ'' ⊂ V⁻ with Λ' ⋔ Λ''.
fn transverse_split<R: Rng>(v: &SymplecticSpace, rng: &mut R) -> (LagrangianFrame, LagrangianFrame) {
    loop {
        let a = symplinalg::random_lagrangian_rng(v, rng);
        let b = symplinalg::random_lagrangian_rng(&v.dual(), rng);
        if a.transverse_to(&b.dual()) && linalg::sigma_min(&v.omega(a.cols(), b.cols())) > 1e-3 {
            return (a, b);
        }
    }
}

/// Σ_i d(Λ̃'_i, Λ̃''_i⁻) for graded splittings Λ'_i × Λ''_i obtained by continuing σ_L along a
/// path transverse to Δᵀ; the tuple (Λ'_i, Λ''_i) is drawn from `seed`.
pub fn generator_degree_alt_a(seq: &CyclicSequence, gen: &Generator, seed: u64) -> Result<i64> {
    checked_generator(seq, gen)?;
    let n = seq.modulus;
    let len = seq.len();
    let l = product_all(seq.graded_tangents()?.iter().map(|g| g.graded().clone()).collect())?;
    let dt = transposed_diagonal(seq)?;
    let mut rng = symplinalg::rng_from_seed(seed);
    let splits: Vec<(LagrangianFrame, LagrangianFrame)> = seq.spaces().iter().map(|v| transverse_split(v, &mut rng)).collect();
    // factors in the order of L: Λ''_0, Λ'_1, Λ''_1, Λ'_2, …, Λ''_r, Λ'_0
    let mut factors = Vec::with_capacity(2 * len);
    for j in 0..len {
        factors.push(splits[j].1.clone());
        factors.push(splits[(j + 1) % len].0.clone());
    }
    let end = factors[1..].iter().fold(factors[0].clone(), |acc, f| acc.product(f));
    let path = transverse_path(l.frame(), &end, dt.frame())?;
    let lifted = grading::transport(&l, &path)?;
    let mut thetas: Vec<f64> = factors.iter().map(principal_theta).collect();
    let rest: f64 = thetas[..2 * len - 1].iter().sum();
    thetas[2 * len - 1] = lifted.theta() - rest;
    let graded = factors
        .iter()
        .zip(&thetas)
        .map(|(f, t)| GradedLagrangian::new(f.clone(), *t, n))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0;
    for i in 0..len {
        let lp = &graded[(2 * i + 2 * len - 1) % (2 * len)];
        let lpp = &graded[2 * i];
        total += degree(lp, &dual_graded(lpp))?;
    }
    Ok(total.rem_euclid(n))
}

/// d(σ_{L(0)}(y), σ_{L(1)}(y)⁻) for the folded pair.
pub fn generator_degree_alt_b(seq: &CyclicSequence, gen: &Generator) -> Result<i64> {
    checked_generator(seq, gen)?;
    let f = fold(seq)?;
    let g = f.sequence.graded_tangents()?;
    degree(g[0].graded(), &dual_graded(g[1].graded()))
}

/// Inserts Δ_{M_p} ⊂ M_p⁻ × M_p with its canonical grading as correspondence number
/// `position`, duplicating M_p (indices mod the length). Perturbations are absorbed first.
pub fn insert_diagonal(seq: &CyclicSequence, position: usize) -> Result<CyclicSequence> {
    let len = seq.len();
    if position > len {
        return Err(Error::Invalid(format!("insertion position {position} beyond length {len}")));
    }
    let abs = seq.absorbed();
    let m = abs.manifolds[position % len].clone();
    let diag = GradedLattice::from_theta(lattice_diagonal(&m), canonical_diagonal(&m.space(), seq.modulus)?.theta())?;
    let mut manifolds = abs.manifolds.clone();
    manifolds.insert(position, m.clone());
    let mut correspondences = abs.correspondences.clone();
    correspondences.insert(position, diag);
    let mut widths = abs.widths.clone();
    widths.insert(position, abs.widths[position % len]);
    let perturbations = manifolds.iter().map(|m| vec![0.0; m.dim()]).collect();
    CyclicSequence::new(manifolds, correspondences, widths, perturbations, seq.modulus)
}

/// (…, x_p, …) ↦ (…, x_p, x_p, …) matching [`insert_diagonal`].
pub fn insert_point(points: &[Vec<f64>], position: usize) -> Vec<Vec<f64>> {
    let mut out = points.to_vec();
    out.insert(position, points[position % points.len()].clone());
    out
}

/// Folded form of an even-length sequence: the two-step sequence pt → M̃ → pt with
/// L(0) = L01 × L23 × … ⊂ M̃ and L(1) = (L12 × L34 × …)ᵀ ⊂ M̃⁻,
/// M̃ = M_0⁻ × M_1 × M_2⁻ × … × M_r.
#[derive(Clone, Debug)]
pub struct Fold {
    pub sequence: CyclicSequence,
    /// Set when a diagonal was appended to reach even length.
    pub inserted: bool,
}

pub fn fold(seq: &CyclicSequence) -> Result<Fold> {
    let inserted = seq.len() % 2 == 1;
    let even = if inserted { insert_diagonal(seq, seq.len())? } else { seq.absorbed() };
    let n = even.modulus;
    let g = even.graded_tangents()?;
    let cs = &even.correspondences;
    let len = even.len();
    let evens: Vec<usize> = (0..len).step_by(2).collect();
    let odds: Vec<usize> = (1..len).step_by(2).collect();

    let l0 = evens[1..].iter().fold(cs[0].corr.lag().clone(), |acc, &j| acc.product(cs[j].corr.lag()));
    let g0 = product_all(evens.iter().map(|&j| g[j].graded().clone()).collect())?;

    let l1 = odds[1..].iter().fold(cs[odds[0]].corr.lag().clone(), |acc, &j| acc.product(cs[j].corr.lag()));
    let g1 = product_all(odds.iter().map(|&j| g[j].graded().clone()).collect())?;
    let m0 = even.manifolds[0].clone();
    let first = odds.iter().enumerate().fold(Torus::point(), |acc, (i, &j)| {
        let c = &cs[j].corr;
        let t = if i + 1 == odds.len() { Torus::point() } else { c.target().clone() };
        acc.product(&c.source().dual()).product(&t)
    });
    let l1 = l1.exchanged(&first, &m0)?;
    let g1 = transpose_graded(&g1, &first.space(), &m0.space())?;

    let mt = l0.ambient().clone();
    if l1.ambient() != &mt.dual() {
        return Err(Error::SpaceMismatch("folded factors live in different tori".into()));
    }
    let c0 = LatticeCorrespondence::from_point(l0);
    let c1 = LatticeCorrespondence::to_point(l1);
    let c0 = GradedLattice::from_theta(c0, g0.theta())?;
    let c1 = GradedLattice::from_theta(c1, g1.theta())?;
    let sequence = CyclicSequence::unperturbed(vec![Torus::point(), mt], vec![c0, c1], n)?;
    Ok(Fold { sequence, inserted })
}

/// Generator of the folded sequence corresponding to (x_0, …, x_r).
pub fn fold_point(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts = points.to_vec();
    if pts.len() % 2 == 1 {
        pts.push(pts[0].clone());
    }
    vec![Vec::new(), pts.concat()]
}

/// The generator bijection of a fold.
pub fn fold_bijection(seq: &CyclicSequence, f: &Fold) -> Result<Vec<usize>> {
    bijection(&generator_points(seq)?, &generator_points(&f.sequence)?, fold_point)
}

/// Transversality read three ways: the lattice Jacobian, L ⋔ Δᵀ, and L(0) ⋔ L(1)⁻.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Transversality {
    pub lattice: bool,
    pub generalized: bool,
    pub folded: bool,
}

pub fn transversality(seq: &CyclicSequence) -> Result<Transversality> {
    let lattice = intlin::abs_det(&matching_jacobian(seq))? != 0;
    let l = product_all(seq.graded_tangents()?.iter().map(|g| g.graded().clone()).collect())?;
    let generalized = l.frame().transverse_to(transposed_diagonal(seq)?.frame());
    let f = fold(seq)?;
    let g = f.sequence.graded_tangents()?;
    let folded = g[0].graded().frame().transverse_to(&g[1].graded().frame().dual());
    Ok(Transversality { lattice, generalized, folded })
}

/// L_a ∘ L_b for lattice correspondences; requires a transverse fiber product, a unimodular
/// gluing map and an injective projection.
pub fn compose_lattice(a: &LatticeCorrespondence, b: &LatticeCorrespondence) -> Result<LatticeCorrespondence> {
    if a.target() != b.source() {
        return Err(Error::SpaceMismatch("correspondences are not composable".into()));
    }
    let (ka, kb) = (a.lag().directions().ncols(), b.lag().directions().ncols());
    let d1 = a.target().dim();
    let a_t = a.target_rows();
    let b_s = b.source_rows();
    let mut glue = IMat::zeros(d1, ka + kb);
    glue.view_mut((0, 0), (d1, ka)).copy_from(&a_t);
    glue.view_mut((0, ka), (d1, kb)).copy_from(&(-&b_s));
    let smith = intlin::smith(&glue)?;
    if smith.rank < d1 {
        let rep = corrlin::compose(&a.tangent()?, &b.tangent()?)?;
        return Err(Error::NotEmbedded(format!(
            "fiber product is not transverse (kernel dimension {}, defect {})",
            rep.kernel.dim(),
            d1 - smith.rank
        )));
    }
    let comps: i128 = smith.diag[..d1].iter().product();
    if comps != 1 {
        return Err(Error::NotEmbedded(format!("fiber product has {comps} components (gluing map is not unimodular)")));
    }
    let c: Vec<f64> = b.source_offset().iter().zip(a.target_offset()).map(|(x, y)| x - y).collect();
    let base = match intlin::solve_congruence(&glue, &c, 1e-9, 1)? {
        Congruence::Degenerate { witness, .. } => witness,
        Congruence::Finite(mut v) if d1 == ka + kb => v.swap_remove(0),
        _ => return Err(Error::Invalid("fiber product equations have no solution".into())),
    };
    let ker = intlin::kernel_basis(&glue)?;
    let (ds, dt) = (a.source().dim(), b.target().dim());
    let mut proj = IMat::zeros(ds + dt, ka + kb);
    proj.view_mut((0, 0), (ds, ka)).copy_from(&a.source_rows());
    proj.view_mut((ds, ka), (dt, kb)).copy_from(&b.target_rows());
    let dirs = &proj * &ker;
    let ps = intlin::smith(&dirs)?;
    let want = a.source().n() + b.target().n();
    if ps.rank < want {
        let rep = corrlin::compose(&a.tangent()?, &b.tangent()?)?;
        return Err(Error::NotEmbedded(format!(
            "projection of the fiber product is not an immersion (kernel dimension {})",
            rep.kernel.dim().max(want - ps.rank)
        )));
    }
    if let Some(i) = ps.diag[..want].iter().position(|&x| x != 1) {
        // w = V e_i / d_i is not integral but projects into the lattice
        let w: Vec<f64> = (0..ker.ncols()).map(|r| ps.v[(r, i)] as f64 / ps.diag[i] as f64).collect();
        let kf = intlin::to_f64(&ker);
        let p: Vec<f64> = base.clone();
        let q: Vec<f64> = (0..ka + kb).map(|r| base[r] + (0..w.len()).map(|s| kf[(r, s)] * w[s]).sum::<f64>()).collect();
        return Err(Error::NotEmbedded(format!(
            "projection is {}-to-one: fiber points {:?} and {:?} have the same image",
            ps.diag[..want].iter().product::<i128>(),
            reduce_point(&p),
            reduce_point(&q)
        )));
    }
    let pa = a.lag().point(&base[..ka]);
    let pb = b.lag().point(&base[ka..]);
    let mut offset = pa[..ds].to_vec();
    offset.extend_from_slice(&pb[b.source().dim()..]);
    correspondence_from_lattice(a.source(), b.target(), &dirs, &offset)
}

/// Result of [`compose_at`]: the shorter sequence, generators on both sides and the bijection
/// dropping the intermediate point.
#[derive(Clone, Debug)]
pub struct Composition {
    pub sequence: CyclicSequence,
    pub before: Vec<Generator>,
    pub after: Vec<Generator>,
    pub map: Vec<usize>,
}

impl Composition {
    pub fn preserves_degrees(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| self.before[i].degree == self.after[j].degree)
    }

    pub fn degree_multisets(&self) -> (Vec<i64>, Vec<i64>) {
        let mut a: Vec<i64> = self.before.iter().map(|g| g.degree).collect();
        let mut b: Vec<i64> = self.after.iter().map(|g| g.degree).collect();
        a.sort_unstable();
        b.sort_unstable();
        (a, b)
    }
}

/// Replaces L_{(j−1)j}, L_{j(j+1)} by their composition over M_j, graded by the induced
/// grading, for 1 ≤ j < length.
pub fn compose_at(seq: &CyclicSequence, j: usize) -> Result<Composition> {
    let len = seq.len();
    if len < 2 || j == 0 || j >= len {
        return Err(Error::Invalid(format!("composition position {j} must lie in 1..{len}")));
    }
    let abs = seq.absorbed();
    let a = &abs.correspondences[j - 1];
    let b = &abs.correspondences[j];
    let composed = compose_lattice(&a.corr, &b.corr)?;
    let graded = compose_graded(&a.graded(seq.modulus)?, &b.graded(seq.modulus)?)?;
    let c = GradedLattice::from_theta(composed, graded.graded().theta())?;
    let mut manifolds = abs.manifolds.clone();
    manifolds.remove(j);
    let mut correspondences = abs.correspondences.clone();
    correspondences.splice(j - 1..=j, [c]);
    let mut widths = abs.widths.clone();
    widths.remove(j);
    let perturbations = manifolds.iter().map(|m| vec![0.0; m.dim()]).collect();
    let sequence = CyclicSequence::new(manifolds, correspondences, widths, perturbations, seq.modulus)?;
    let before = intersection_points(seq)?;
    let after = intersection_points(&sequence)?;
    let bp: Vec<Vec<Vec<f64>>> = before.iter().map(|g| g.points.clone()).collect();
    let ap: Vec<Vec<Vec<f64>>> = after.iter().map(|g| g.points.clone()).collect();
    let map = bijection(&bp, &ap, |p| {
        let mut q = p.to_vec();
        q.remove(j);
        q
    })?;
    Ok(Composition { sequence, before, after, map })
}

/// Factorization of a sequence starting at the point through a split correspondence
/// L_{j(j+1)} = L_j × L_{j+1}.
#[derive(Clone, Debug)]
pub struct KunnethSplit {
    pub left: CyclicSequence,
    pub right: CyclicSequence,
    pub generators: Vec<Generator>,
    pub left_generators: Vec<Generator>,
    pub right_generators: Vec<Generator>,
    /// For each generator of the full sequence, its (left, right) factors.
    pub pairs: Vec<(usize, usize)>,
}

impl KunnethSplit {
    /// Degrees add along the factorization.
    pub fn degrees_add(&self) -> bool {
        let n = self.left.modulus;
        self.pairs.iter().enumerate().all(|(i, &(a, b))| {
            self.generators[i].degree == (self.left_generators[a].degree + self.right_generators[b].degree).rem_euclid(n)
        })
    }

    /// Generator order of the tensor product: position of (a, b) is a·|right| + b.
    pub fn tensor_order(&self) -> Vec<usize> {
        let k = self.right_generators.len();
        let mut perm = vec![0; self.pairs.len()];
        for (i, &(a, b)) in self.pairs.iter().enumerate() {
            perm[a * k + b] = i;
        }
        perm
    }
}

pub fn kunneth_split(seq: &CyclicSequence, j: usize) -> Result<KunnethSplit> {
    let len = seq.len();
    if !seq.manifolds[0].is_point() {
        return Err(Error::Invalid("Künneth splitting needs M_0 = pt".into()));
    }
    if j >= len {
        return Err(Error::Invalid(format!("position {j} beyond length {len}")));
    }
    let n = seq.modulus;
    let abs = seq.absorbed();
    let lj = &abs.correspondences[j];
    let (la, lb) = lj
        .corr
        .split()
        .ok_or_else(|| Error::Invalid(format!("correspondence {j} is not a product of Lagrangian subtori")))?;
    let theta = lj.graded(n)?.graded().theta();
    let ca = LatticeCorrespondence::to_point(la);
    let cb = LatticeCorrespondence::from_point(lb);
    let ga = GradedLattice::new(ca.clone(), 0);
    let theta_a = principal_theta(ca.tangent()?.lag());
    let gb = GradedLattice::from_theta(cb, theta - theta_a)?;

    let mut lm = abs.manifolds[..=j].to_vec();
    let mut lc = abs.correspondences[..j].to_vec();
    lc.push(ga);
    if lm.is_empty() {
        lm.push(Torus::point());
    }
    let mut rm = vec![Torus::point()];
    rm.extend_from_slice(&abs.manifolds[j + 1..]);
    let mut rc = vec![gb];
    rc.extend_from_slice(&abs.correspondences[j + 1..]);
    let left = CyclicSequence::unperturbed(lm, lc, n)?;
    let right = CyclicSequence::unperturbed(rm, rc, n)?;

    let generators = intersection_points(seq)?;
    let left_generators = intersection_points(&left)?;
    let right_generators = intersection_points(&right)?;
    if generators.len() != left_generators.len() * right_generators.len() {
        return Err(Error::Invalid(format!(
            "{} generators do not factor as {} × {}",
            generators.len(),
            left_generators.len(),
            right_generators.len()
        )));
    }
    let lp: Vec<Vec<Vec<f64>>> = left_generators.iter().map(|g| g.points.clone()).collect();
    let rp: Vec<Vec<Vec<f64>>> = right_generators.iter().map(|g| g.points.clone()).collect();
    let mut pairs = Vec::with_capacity(generators.len());
    let mut seen = std::collections::HashSet::new();
    for g in &generators {
        let l = g.points[..=j].to_vec();
        let mut r = vec![Vec::new()];
        r.extend_from_slice(&g.points[j + 1..]);
        let a = find_tuple(&lp, &l).ok_or_else(|| Error::Invalid(format!("left factor {} missing", format_point(&l))))?;
        let b = find_tuple(&rp, &r).ok_or_else(|| Error::Invalid(format!("right factor {} missing", format_point(&r))))?;
        if !seen.insert((a, b)) {
            return Err(Error::Invalid("two generators share their factors".into()));
        }
        pairs.push((a, b));
    }
    Ok(KunnethSplit { left, right, generators, left_generators, right_generators, pairs })
}

/// Complex on the generators of `seq` with counts from `oracle` (indices into
/// [`intersection_points`]).
pub fn build_complex<O: DifferentialOracle + ?Sized>(seq: &CyclicSequence, oracle: &O) -> Result<(Vec<Generator>, GradedChainComplex)> {
    let gens = intersection_points(seq)?;
    let cx = GradedChainComplex::from_oracle(gens.iter().map(|g| g.degree).collect(), seq.modulus, oracle)?;
    Ok((gens, cx))
}

// ---- random sequences ----

/// Integer symplectic transvection w ↦ w + ω(v, w)·v applied to the columns of `a`.
fn transvect(a: &IMat, v: &IMat, form: &IMat) -> IMat {
    let coeff = v.transpose() * form * a;
    a + v * coeff
}

/// Random primitive Lagrangian lattice: the span of the x-coordinates moved by a few
/// transvections along sparse integer vectors.
pub fn random_lattice_lagrangian<R: Rng>(ambient: &Torus, steps: usize, rng: &mut R) -> LatticeLagrangian {
    let d = ambient.dim();
    let n = ambient.n();
    let mut a = IMat::zeros(d, n);
    let mut col = 0;
    let mut at = 0;
    for &(k, _) in ambient.blocks() {
        for i in 0..k {
            a[(at + i, col)] = 1;
            col += 1;
        }
        at += 2 * k;
    }
    let form = ambient.int_form();
    for _ in 0..steps {
        if d == 0 {
            break;
        }
        let mut v = IMat::zeros(d, 1);
        for _ in 0..rng.random_range(1..=2) {
            v[(rng.random_range(0..d), 0)] = if rng.random_bool(0.5) { 1 } else { -1 };
        }
        a = transvect(&a, &v, &form);
    }
    let offset = (0..d).map(|_| rng.random::<f64>()).collect();
    LatticeLagrangian::new(ambient, a, offset).expect("transvections preserve primitive Lagrangian lattices")
}

pub fn random_lattice_correspondence<R: Rng>(source: &Torus, target: &Torus, steps: usize, rng: &mut R) -> LatticeCorrespondence {
    let lag = random_lattice_lagrangian(&correspondence_torus(source, target), steps, rng);
    LatticeCorrespondence::from_lagrangian(source, target, lag).expect("ambient matches")
}

/// Shape of random sequences.
#[derive(Clone, Debug)]
pub struct RandomSequenceSpec {
    /// Length r + 1 is drawn from 1..=max_len.
    pub max_len: usize,
    pub max_n: usize,
    pub modulus: i64,
    /// Upper bound on the number of generators.
    pub max_generators: i128,
    /// Start at the point.
    pub pointed: bool,
    /// Force a split correspondence at this index when pointed.
    pub split_at: Option<usize>,
}

impl Default for RandomSequenceSpec {
    fn default() -> Self {
        RandomSequenceSpec { max_len: 5, max_n: 2, modulus: 4, max_generators: 64, pointed: false, split_at: None }
    }
}

fn random_perturbation<R: Rng>(m: &Torus, rng: &mut R) -> Vec<f64> {
    (0..m.dim()).map(|_| rng.random_range(-0.25..0.25)).collect()
}

/// Random transverse lattice sequence with a bounded, nonzero number of generators.
pub fn random_sequence<R: Rng>(spec: &RandomSequenceSpec, rng: &mut R) -> CyclicSequence {
    loop {
        let len = rng.random_range(1..=spec.max_len.max(1));
        let len = match spec.split_at {
            Some(j) => len.max(j + 2),
            None => len,
        };
        let manifolds: Vec<Torus> = (0..len)
            .map(|i| if i == 0 && spec.pointed { Torus::point() } else { Torus::standard(rng.random_range(0..=spec.max_n)) })
            .collect();
        let correspondences: Vec<GradedLattice> = (0..len)
            .map(|j| {
                let (s, t) = (&manifolds[j], &manifolds[(j + 1) % len]);
                let corr = if spec.split_at == Some(j) {
                    let a = random_lattice_lagrangian(&s.dual(), 2, rng);
                    let b = random_lattice_lagrangian(t, 2, rng);
                    LatticeCorrespondence::split_product(&a, &b)
                } else {
                    random_lattice_correspondence(s, t, 3, rng)
                };
                GradedLattice::new(corr, rng.random_range(0..spec.modulus))
            })
            .collect();
        let widths = (0..len).map(|_| rng.random_range(0.5..2.0)).collect();
        let perturbations = manifolds.iter().map(|m| random_perturbation(m, rng)).collect();
        let seq = CyclicSequence::new(manifolds, correspondences, widths, perturbations, spec.modulus).expect("consistent shapes");
        let det = intlin::abs_det(&matching_jacobian(&seq)).unwrap_or(0);
        if det != 0 && det <= spec.max_generators {
            return seq;
        }
    }
}

// ---- JSON ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifoldJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Blocks (n_i, ±1) of a product of tori.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<(usize, i8)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeCorrespondenceJson {
    /// Integer direction vectors as columns.
    pub directions: Vec<Vec<i64>>,
    pub offset: Vec<f64>,
    #[serde(default)]
    pub grading: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequenceJson {
    pub provider: String,
    pub manifolds: Vec<ManifoldJson>,
    pub correspondences: Vec<LatticeCorrespondenceJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<f64>>,
    #[serde(rename = "N")]
    pub modulus: i64,
}

fn at(pointer: String, e: Error) -> Error {
    Error::Invalid(format!("{pointer}: {e}"))
}

impl SequenceJson {
    pub fn from_sequence(seq: &CyclicSequence) -> Self {
        let manifolds = seq
            .manifolds
            .iter()
            .zip(&seq.perturbations)
            .map(|(m, p)| {
                let simple = m.blocks().len() <= 1 && m.blocks().iter().all(|b| b.1 > 0);
                ManifoldJson {
                    n: simple.then(|| m.n()),
                    blocks: (!simple).then(|| m.blocks().to_vec()),
                    perturbation: p.iter().any(|x| *x != 0.0).then(|| p.clone()),
                }
            })
            .collect();
        let correspondences = seq
            .correspondences
            .iter()
            .map(|c| LatticeCorrespondenceJson {
                directions: int_columns(c.corr.lag().directions()),
                offset: c.corr.lag().offset().to_vec(),
                grading: c.shift,
            })
            .collect();
        SequenceJson {
            provider: "torus".into(),
            manifolds,
            correspondences,
            widths: Some(seq.widths.clone()),
            modulus: seq.modulus,
        }
    }

    /// Errors name the offending entry by its JSON pointer.
    pub fn to_sequence(&self) -> Result<CyclicSequence> {
        if self.provider != "torus" {
            return Err(at("/provider".into(), Error::Invalid(format!("expected \"torus\", found \"{}\"", self.provider))));
        }
        let mut manifolds = Vec::new();
        let mut perturbations = Vec::new();
        for (i, m) in self.manifolds.iter().enumerate() {
            let t = match (&m.n, &m.blocks) {
                (Some(n), None) => Torus::standard(*n),
                (None, Some(b)) => Torus::from_blocks(b.clone()),
                _ => return Err(at(format!("/manifolds/{i}"), Error::Invalid("give exactly one of \"n\" and \"blocks\"".into()))),
            };
            let p = m.perturbation.clone().unwrap_or_else(|| vec![0.0; t.dim()]);
            if p.len() != t.dim() {
                return Err(at(
                    format!("/manifolds/{i}/perturbation"),
                    Error::DimensionMismatch(format!("length {} for a torus of dimension {}", p.len(), t.dim())),
                ));
            }
            manifolds.push(t);
            perturbations.push(p);
        }
        let len = manifolds.len();
        if len == 0 {
            return Err(at("/manifolds".into(), Error::Invalid("empty".into())));
        }
        if self.correspondences.len() != len {
            return Err(at(
                "/correspondences".into(),
                Error::Invalid(format!("{} entries for {len} manifolds", self.correspondences.len())),
            ));
        }
        let mut correspondences = Vec::new();
        for (j, c) in self.correspondences.iter().enumerate() {
            let (s, t) = (&manifolds[j], &manifolds[(j + 1) % len]);
            let rows = s.dim() + t.dim();
            let a = from_int_columns(rows, &c.directions).map_err(|e| at(format!("/correspondences/{j}/directions"), e))?;
            let corr = correspondence_from_lattice(s, t, &a, &c.offset).map_err(|e| {
                let field = if matches!(e, Error::DimensionMismatch(ref m) if m.starts_with("offset")) { "offset" } else { "directions" };
                at(format!("/correspondences/{j}/{field}"), e)
            })?;
            correspondences.push(GradedLattice::new(corr, c.grading));
        }
        let widths = self.widths.clone().unwrap_or_else(|| vec![1.0; len]);
        CyclicSequence::new(manifolds, correspondences, widths, perturbations, self.modulus).map_err(|e| {
            let p = match e {
                Error::InvalidModulus(_) => "/N",
                Error::Invalid(ref m) if m.starts_with("widths") => "/widths",
                _ => "",
            };
            at(p.into(), e)
        })
    }
}
