//! Linear Lagrangian correspondences: transposes, graphs, composition with
//! embeddedness diagnostics, and the fiber contraction.
//!
//! Fiber products live in V0⁻ × V1 × V1⁻ × V2 in that order.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::symplinalg::{
    self, columns_to_mat, mat_to_columns, symp_complement, LagrangianFrame, SpaceJson, Subspace, SymplecticSpace,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Smallest singular value of the constraint matrix above which a fiber product is transverse.
pub const TRANSVERSE_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct LinearCorrespondence {
    source: SymplecticSpace,
    target: SymplecticSpace,
    lag: LagrangianFrame,
}

/// V0⁻ × V1.
pub fn correspondence_space(source: &SymplecticSpace, target: &SymplecticSpace) -> SymplecticSpace {
    source.dual().product(target)
}

/// V0⁻ × V1 × V1⁻ × V2.
pub fn fiber_space(v0: &SymplecticSpace, v1: &SymplecticSpace, v2: &SymplecticSpace) -> SymplecticSpace {
    v0.dual().product(v1).product(&v1.dual()).product(v2)
}

pub fn same_space(a: &SymplecticSpace, b: &SymplecticSpace) -> bool {
    a.dim() == b.dim() && linalg::max_abs(&(a.form() - b.form())) < 1e-12
}

/// Permutation matrix sending (u, v) with u ∈ R^a, v ∈ R^b to (v, u).
pub fn swap_blocks(a: usize, b: usize) -> Mat {
    let mut p = Mat::zeros(a + b, a + b);
    for i in 0..a {
        p[(b + i, i)] = 1.0;
    }
    for i in 0..b {
        p[(i, a + i)] = 1.0;
    }
    p
}

impl LinearCorrespondence {
    pub fn new(source: &SymplecticSpace, target: &SymplecticSpace, cols: Mat) -> Result<Self> {
        let sp = correspondence_space(source, target);
        let lag = LagrangianFrame::new(&sp, cols)?;
        Ok(LinearCorrespondence { source: source.clone(), target: target.clone(), lag })
    }

    pub fn from_frame(source: &SymplecticSpace, target: &SymplecticSpace, lag: &LagrangianFrame) -> Result<Self> {
        let sp = correspondence_space(source, target);
        if !same_space(&sp, lag.space()) {
            return Err(Error::SpaceMismatch("frame does not live in source⁻ × target".into()));
        }
        Ok(LinearCorrespondence { source: source.clone(), target: target.clone(), lag: lag.clone() })
    }

    pub fn source(&self) -> &SymplecticSpace {
        &self.source
    }

    pub fn target(&self) -> &SymplecticSpace {
        &self.target
    }

    pub fn lag(&self) -> &LagrangianFrame {
        &self.lag
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.source.n(), self.target.n())
    }

    /// Rows of the frame lying in the source factor.
    pub fn source_block(&self) -> Mat {
        linalg::rows(self.lag.cols(), 0, self.source.dim())
    }

    pub fn target_block(&self) -> Mat {
        linalg::rows(self.lag.cols(), self.source.dim(), self.target.dim())
    }

    pub fn distance(&self, other: &LinearCorrespondence) -> f64 {
        self.lag.distance(&other.lag)
    }
}

pub fn transpose(c: &LinearCorrespondence) -> LinearCorrespondence {
    let p = swap_blocks(c.source.dim(), c.target.dim());
    let sp = correspondence_space(&c.target, &c.source);
    LinearCorrespondence {
        source: c.target.clone(),
        target: c.source.clone(),
        lag: LagrangianFrame::trusted(&sp, p * c.lag.cols()),
    }
}

/// Graph {(v, Sv)} of a linear symplectomorphism between two spaces.
pub fn graph_between(s: &Mat, source: &SymplecticSpace, target: &SymplecticSpace) -> Result<LinearCorrespondence> {
    if s.nrows() != target.dim() || s.ncols() != source.dim() {
        return Err(Error::DimensionMismatch(format!(
            "map is {}x{}, spaces have dimension {} and {}",
            s.nrows(),
            s.ncols(),
            source.dim(),
            target.dim()
        )));
    }
    let res = linalg::max_abs(&(s.transpose() * target.form() * s - source.form()));
    let scale = linalg::max_abs(s).powi(2).max(1.0) * linalg::max_abs(source.form()).max(1.0);
    if res > 1e-9 * scale {
        return Err(Error::NotSymplectic(res));
    }
    let cols = linalg::vstack(&Mat::identity(source.dim(), source.dim()), s);
    LinearCorrespondence::new(source, target, cols)
}

pub fn graph(s: &Mat, sp: &SymplecticSpace) -> Result<LinearCorrespondence> {
    graph_between(s, sp, sp)
}

pub fn diagonal(sp: &SymplecticSpace) -> LinearCorrespondence {
    graph(&Mat::identity(sp.dim(), sp.dim()), sp).expect("identity is symplectic")
}

/// Metric complement {(v, −v)} of the diagonal.
pub fn antidiagonal(sp: &SymplecticSpace) -> LinearCorrespondence {
    let d = sp.dim();
    let cols = linalg::vstack(&Mat::identity(d, d), &(-Mat::identity(d, d)));
    LinearCorrespondence::new(sp, sp, cols).expect("antidiagonal is Lagrangian")
}

#[derive(Clone, Debug)]
pub struct CompositionReport {
    pub fiber: Subspace,
    pub transverse: bool,
    pub kernel: Subspace,
    pub defect: usize,
    pub composed: LinearCorrespondence,
    /// Smallest singular value of the fiber-product constraint.
    pub margin: f64,
}

pub fn compose(c01: &LinearCorrespondence, c12: &LinearCorrespondence) -> Result<CompositionReport> {
    if !same_space(&c01.target, &c12.source) {
        return Err(Error::SpaceMismatch(format!(
            "target of dimension {} does not match source of dimension {}",
            c01.target.dim(),
            c12.source.dim()
        )));
    }
    let (v0, v1, v2) = (&c01.source, &c01.target, &c12.target);
    let d1 = v1.dim();
    let a0 = c01.source_block();
    let a1 = c01.target_block();
    let b1 = c12.source_block();
    let b2 = c12.target_block();
    let (k01, k12) = (a0.ncols(), b1.ncols());

    // fiber product: A1 a = B1 b
    let constraint = linalg::hstack(&a1, &(-&b1));
    let sv = linalg::singular_values(&constraint);
    let margin = if d1 == 0 { f64::INFINITY } else if sv.len() < d1 { 0.0 } else { sv[d1 - 1] };
    let transverse = margin > TRANSVERSE_TOL;

    let coeffs = linalg::null_space(&constraint, TRANSVERSE_TOL);
    let ca = linalg::rows(&coeffs, 0, k01);
    let cb = linalg::rows(&coeffs, k01, k12);
    let fiber_vecs = linalg::vstack(
        &linalg::vstack(&(&a0 * &ca), &(&a1 * &ca)),
        &linalg::vstack(&(&b1 * &cb), &(&b2 * &cb)),
    );
    let fspace = fiber_space(v0, v1, v2);
    let fiber = Subspace::span(&fspace, &fiber_vecs);

    let proj = linalg::vstack(&(&a0 * &ca), &(&b2 * &cb));
    let k = v0.n() + v2.n();
    let composed_cols = linalg::orth_k(&proj, k);
    let composed = LinearCorrespondence::new(v0, v2, composed_cols)?;

    // ker Λ01ᵗ ∩ ker Λ12
    let ka = &a1 * linalg::null_space(&a0, TRANSVERSE_TOL);
    let kb = &b1 * linalg::null_space(&b2, TRANSVERSE_TOL);
    let ka = linalg::orth(&ka, 1e-6);
    let kb = linalg::orth(&kb, 1e-6);
    let kernel_basis = linalg::intersect(&ka, &kb, TRANSVERSE_TOL);
    let kernel = Subspace::span(v1, &kernel_basis);
    let defect = defect_by_complements(c01, c12);

    Ok(CompositionReport { fiber, transverse, kernel, defect, composed, margin })
}

/// Dimension of (im Λ01)^ω ∩ (im Λ12ᵗ)^ω computed directly from the complements.
pub fn defect_by_complements(c01: &LinearCorrespondence, c12: &LinearCorrespondence) -> usize {
    let v1 = c01.target();
    let im01 = Subspace::span(v1, &c01.target_block());
    let im12 = Subspace::span(v1, &c12.source_block());
    let w1 = symp_complement(&im01);
    let w2 = symp_complement(&im12);
    linalg::intersect(w1.basis(), w2.basis(), TRANSVERSE_TOL).ncols()
}

pub fn is_embedded_linear(c01: &LinearCorrespondence, c12: &LinearCorrespondence) -> bool {
    compose(c01, c12).map(|r| r.transverse).unwrap_or(false)
}

/// Orthonormal basis of V0 × Δ_{V1} × V2 inside the fiber space.
fn diagonal_constraint_basis(n0: usize, n1: usize, n2: usize) -> Mat {
    let (d0, d1, d2) = (2 * n0, 2 * n1, 2 * n2);
    let total = d0 + 2 * d1 + d2;
    let mut b = Mat::zeros(total, d0 + d1 + d2);
    for i in 0..d0 {
        b[(i, i)] = 1.0;
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d1 {
        b[(d0 + i, d0 + i)] = h;
        b[(d0 + d1 + i, d0 + i)] = h;
    }
    for i in 0..d2 {
        b[(d0 + 2 * d1 + i, d0 + d1 + i)] = 1.0;
    }
    b
}

/// Split of Λ into Λ̂02 = Λ ∩ (V0 × Δ × V2) and its orthogonal complement Λ̂11 in Λ.
pub fn fiber_split(lam: &LagrangianFrame, n: (usize, usize, usize)) -> Result<(Mat, Mat)> {
    let (n0, n1, n2) = n;
    let total = 2 * (n0 + 2 * n1 + n2);
    if lam.space().dim() != total {
        return Err(Error::DimensionMismatch(format!(
            "frame lives in dimension {}, expected {}",
            lam.space().dim(),
            total
        )));
    }
    let d = diagonal_constraint_basis(n0, n1, n2);
    let margin = linalg::sigma_min(&linalg::hstack(lam.cols(), &d));
    if margin <= TRANSVERSE_TOL {
        return Err(Error::NotTransverse(format!("Λ meets V0×Δ×V2 non-transversally (σ = {margin:.3e})")));
    }
    let hat02 = linalg::intersect(lam.cols(), &d, TRANSVERSE_TOL);
    if hat02.ncols() != n0 + n2 {
        return Err(Error::NotTransverse(format!("fiber part has dimension {}, expected {}", hat02.ncols(), n0 + n2)));
    }
    let coeff = linalg::null_space(&(hat02.transpose() * lam.cols()), 1e-9);
    let hat11 = lam.cols() * coeff;
    Ok((hat02, hat11))
}

/// Contraction of the Lagrangians transverse to V0 × Δ × V2 with a fixed composition:
/// t = 0 returns Λ, t = 1 returns the split Lagrangian Λ02 × Δ⊥ (factors reordered).
pub fn contract_fiber(lam: &LagrangianFrame, n: (usize, usize, usize), t: f64) -> Result<LagrangianFrame> {
    let (n0, n1, _) = n;
    let (hat02, hat11) = fiber_split(lam, n)?;
    if t == 0.0 {
        return Ok(lam.clone());
    }
    let s = 1.0 - t;
    let (d0, d1) = (2 * n0, 2 * n1);
    let mut out = Mat::zeros(lam.space().dim(), hat02.ncols() + hat11.ncols());
    for j in 0..hat02.ncols() {
        let q = hat02.column(j);
        for i in 0..out.nrows() {
            let mid = i >= d0 && i < d0 + 2 * d1;
            out[(i, j)] = if mid { s * q[i] } else { q[i] };
        }
    }
    let off = hat02.ncols();
    for j in 0..hat11.ncols() {
        let q = hat11.column(j);
        for i in 0..out.nrows() {
            out[(i, off + j)] = if i < d0 || i >= d0 + 2 * d1 {
                s * q[i]
            } else {
                let k = if i < d0 + d1 { i - d0 } else { i - d0 - d1 };
                let (b, c) = (q[d0 + k], q[d0 + d1 + k]);
                let u = 0.5 * (b - c);
                let j1 = 0.5 * (b + c);
                if i < d0 + d1 {
                    u + s * s * j1
                } else {
                    -u + s * s * j1
                }
            };
        }
    }
    LagrangianFrame::new(lam.space(), out)
}

/// Ψ(Λ02 × Δ⊥) in V0⁻ × V1 × V1⁻ × V2.
pub fn split_lagrangian(c02: &LinearCorrespondence, v1: &SymplecticSpace) -> Result<LagrangianFrame> {
    let (d0, d2, d1) = (c02.source().dim(), c02.target().dim(), v1.dim());
    let a = c02.source_block();
    let b = c02.target_block();
    let k = a.ncols();
    let total = d0 + 2 * d1 + d2;
    let mut out = Mat::zeros(total, k + d1);
    out.view_mut((0, 0), (d0, k)).copy_from(&a);
    out.view_mut((d0 + 2 * d1, 0), (d2, k)).copy_from(&b);
    for i in 0..d1 {
        out[(d0 + i, k + i)] = 1.0;
        out[(d0 + d1 + i, k + i)] = -1.0;
    }
    LagrangianFrame::new(&fiber_space(c02.source(), v1, c02.target()), out)
}

/// Λ01 × Λ12 reordered into V0⁻ × V1 × V1⁻ × V2.
pub fn product_fiber(c01: &LinearCorrespondence, c12: &LinearCorrespondence) -> Result<LagrangianFrame> {
    if !same_space(c01.target(), c12.source()) {
        return Err(Error::SpaceMismatch("correspondences are not composable".into()));
    }
    let cols = linalg::block_diag(c01.lag.cols(), c12.lag.cols());
    LagrangianFrame::new(&fiber_space(c01.source(), c01.target(), c12.target()), cols)
}

/// Composition π02(Λ ∩ (V0 × Δ × V2)) of a Lagrangian in the fiber space.
pub fn compose_fiber(
    lam: &LagrangianFrame,
    v0: &SymplecticSpace,
    v1: &SymplecticSpace,
    v2: &SymplecticSpace,
) -> Result<LinearCorrespondence> {
    let (hat02, _) = fiber_split(lam, (v0.n(), v1.n(), v2.n()))?;
    let (d0, d1, d2) = (v0.dim(), v1.dim(), v2.dim());
    let proj = linalg::vstack(&linalg::rows(&hat02, 0, d0), &linalg::rows(&hat02, d0 + 2 * d1, d2));
    LinearCorrespondence::new(v0, v2, proj)
}

pub fn random_correspondence<R: Rng>(
    source: &SymplecticSpace,
    target: &SymplecticSpace,
    rng: &mut R,
) -> LinearCorrespondence {
    let sp = correspondence_space(source, target);
    let lag = symplinalg::random_lagrangian_rng(&sp, rng);
    LinearCorrespondence { source: source.clone(), target: target.clone(), lag }
}

/// (L ∩ U^ω) + U for an isotropic U: a Lagrangian containing U.
pub fn reduce_onto(lag: &LagrangianFrame, u: &Mat) -> Result<LagrangianFrame> {
    let sp = lag.space();
    let uc = symp_complement(&Subspace::span(sp, u));
    let part = linalg::intersect(lag.cols(), uc.basis(), 1e-9);
    LagrangianFrame::new(sp, linalg::hstack(&part, &linalg::orth(u, 1e-9)))
}

/// Composable pair whose kernel contains a random isotropic subspace of V1 of dimension `k`.
pub fn random_degenerate_pair<R: Rng>(
    n: (usize, usize, usize),
    k: usize,
    rng: &mut R,
) -> Result<(LinearCorrespondence, LinearCorrespondence)> {
    let (n0, n1, n2) = n;
    if k > n1 {
        return Err(Error::Invalid(format!("isotropic dimension {k} exceeds {n1}")));
    }
    let (v0, v1, v2) = (SymplecticSpace::standard(n0), SymplecticSpace::standard(n1), SymplecticSpace::standard(n2));
    let iso = symplinalg::random_lagrangian_rng(&v1, rng);
    let u = linalg::select_cols(iso.cols(), &(0..k).collect::<Vec<_>>());
    let a = random_correspondence(&v0, &v1, rng);
    let b = random_correspondence(&v1, &v2, rng);
    let ua = linalg::vstack(&Mat::zeros(v0.dim(), k), &u);
    let ub = linalg::vstack(&u, &Mat::zeros(v2.dim(), k));
    let la = reduce_onto(a.lag(), &ua)?;
    let lb = reduce_onto(b.lag(), &ub)?;
    Ok((
        LinearCorrespondence::from_frame(&v0, &v1, &la)?,
        LinearCorrespondence::from_frame(&v1, &v2, &lb)?,
    ))
}

// ---- JSON ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrespondenceJson {
    pub source: SpaceJson,
    pub target: SpaceJson,
    pub frame: Vec<Vec<f64>>,
}

impl CorrespondenceJson {
    pub fn from_corr(c: &LinearCorrespondence) -> Self {
        CorrespondenceJson {
            source: SpaceJson::from_space(c.source()),
            target: SpaceJson::from_space(c.target()),
            frame: mat_to_columns(c.lag.cols()),
        }
    }

    pub fn to_corr(&self) -> Result<LinearCorrespondence> {
        let s = self.source.to_space()?;
        let t = self.target.to_space()?;
        let cols = columns_to_mat(s.dim() + t.dim(), &self.frame)?;
        LinearCorrespondence::new(&s, &t, cols)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompositionReportJson {
    pub fiber: Vec<Vec<f64>>,
    pub transverse: bool,
    pub kernel: Vec<Vec<f64>>,
    pub defect: usize,
    pub composed: CorrespondenceJson,
    pub margin: f64,
}

impl CompositionReportJson {
    pub fn from_report(r: &CompositionReport) -> Self {
        CompositionReportJson {
            fiber: mat_to_columns(r.fiber.basis()),
            transverse: r.transverse,
            kernel: mat_to_columns(r.kernel.basis()),
            defect: r.defect,
            composed: CorrespondenceJson::from_corr(&r.composed),
            margin: if r.margin.is_finite() { r.margin } else { f64::MAX },
        }
    }
}
