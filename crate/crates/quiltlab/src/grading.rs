//! Graded Lagrangian subspaces for the N-fold Maslov cover, the degree map and the
//! induced grading on geometric compositions.
//!
//! A point of the cover is a frame together with a real lift θ of arg det²(X+iY)/2π; its
//! class is θ mod N. The deck action c·Λ̃ lowers θ by c, which makes
//! d(Λ̃0, c·Λ̃1) = c + d(Λ̃0, Λ̃1).

use crate::corrlin::{self, same_space, LinearCorrespondence};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::maslov::{self, real_lagrangian, LagrangianPath};
use crate::symplinalg::{self, FrameJson, LagrangianFrame, SymplecticSpace};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Length of the initial positive arc s ↦ e^{sJ}Λ0 in the degree path. The arc has no
/// interior crossings with Λ0 for any length below π.
pub const DEGREE_ARC: f64 = PI / 2.0;
const PHASE_TOL: f64 = 1e-8;
const LIFT_TOL: f64 = 1e-4;
const DEGREE_ATTEMPTS: u64 = 6;

#[derive(Clone, Debug)]
pub struct GradedLagrangian {
    frame: LagrangianFrame,
    theta: f64,
    modulus: i64,
}

fn check_modulus(n: i64) -> Result<()> {
    if n <= 0 || n % 2 != 0 {
        return Err(Error::InvalidModulus(n));
    }
    Ok(())
}

/// arg det²/2π of a frame in [0, 1).
pub fn principal_theta(frame: &LagrangianFrame) -> f64 {
    let t = (frame.det2().arg() / (2.0 * PI)).rem_euclid(1.0);
    if t > 1.0 - 1e-12 {
        0.0
    } else {
        t
    }
}

/// The lift of `frame` closest to the estimate `theta`.
fn snap(frame: &LagrangianFrame, theta: f64) -> (f64, f64) {
    let p = principal_theta(frame);
    let k = (theta - p).round();
    (p + k, (theta - p - k).abs())
}

impl GradedLagrangian {
    pub fn new(frame: LagrangianFrame, theta: f64, modulus: i64) -> Result<Self> {
        check_modulus(modulus)?;
        let z = Complex64::from_polar(1.0, 2.0 * PI * theta);
        let err = (z - frame.det2()).norm();
        if err > PHASE_TOL {
            return Err(Error::BadGrading(format!("exp(2πiθ) differs from det² by {err:.3e}")));
        }
        Ok(GradedLagrangian { frame, theta, modulus })
    }

    pub fn frame(&self) -> &LagrangianFrame {
        &self.frame
    }

    pub fn space(&self) -> &SymplecticSpace {
        self.frame.space()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn modulus(&self) -> i64 {
        self.modulus
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    /// θ mod N.
    pub fn class(&self) -> f64 {
        self.theta.rem_euclid(self.modulus as f64)
    }

    /// Same point of the cover: equal spans and θ differing by a multiple of N.
    pub fn same_point(&self, other: &GradedLagrangian, tol: f64) -> bool {
        if self.modulus != other.modulus || !same_space(self.space(), other.space()) {
            return false;
        }
        let d = (self.theta - other.theta) / self.modulus as f64;
        self.frame.distance(&other.frame) < tol && (d - d.round()).abs() < 1e-6
    }
}

/// Lift with θ = principal value + k.
pub fn grade(frame: &LagrangianFrame, k: i64, modulus: i64) -> Result<GradedLagrangian> {
    check_modulus(modulus)?;
    Ok(GradedLagrangian { frame: frame.clone(), theta: principal_theta(frame) + k as f64, modulus })
}

/// Grading read off an oriented basis: e^{iπθ} = det(X+iY) of the given columns.
/// At N = 2 this is the identification of the 2-fold cover with oriented Lagrangians.
pub fn grade_oriented(space: &SymplecticSpace, cols: &Mat, modulus: i64) -> Result<GradedLagrangian> {
    check_modulus(modulus)?;
    let frame = LagrangianFrame::new(space, cols.clone())?;
    let d = linalg::to_complex(&(space.to_std() * cols)).determinant();
    if d.norm() == 0.0 && space.n() > 0 {
        return Err(Error::RankDeficient { rank: 0, expected: space.n() });
    }
    let theta = if space.n() == 0 { 0.0 } else { d.arg() / PI };
    let (theta, _) = snap(&frame, theta);
    GradedLagrangian::new(frame, theta, modulus)
}

/// c·Λ̃: θ ↦ θ − c.
pub fn shift(a: &GradedLagrangian, c: i64) -> GradedLagrangian {
    GradedLagrangian { frame: a.frame.clone(), theta: a.theta - c as f64, modulus: a.modulus }
}

/// Λ̃⁻ over the dual space: θ ↦ −θ.
pub fn dual_graded(a: &GradedLagrangian) -> GradedLagrangian {
    GradedLagrangian { frame: a.frame.dual(), theta: -a.theta, modulus: a.modulus }
}

/// Λ̃a ×^N Λ̃b: θ ↦ θa + θb.
pub fn product_graded(a: &GradedLagrangian, b: &GradedLagrangian) -> Result<GradedLagrangian> {
    if a.modulus != b.modulus {
        return Err(Error::ModulusMismatch(a.modulus, b.modulus));
    }
    Ok(GradedLagrangian { frame: a.frame.product(&b.frame), theta: a.theta + b.theta, modulus: a.modulus })
}

/// Z ↦ Zᵀ under the exchange V × W → W × V.
pub fn transpose_graded(a: &GradedLagrangian, first: &SymplecticSpace, rest: &SymplecticSpace) -> Result<GradedLagrangian> {
    if !same_space(a.space(), &first.product(rest)) {
        return Err(Error::SpaceMismatch("graded subspace does not live in the given product".into()));
    }
    let (df, dr) = (first.dim(), rest.dim());
    let cols = a.frame.cols();
    let swapped = linalg::vstack(&linalg::rows(cols, df, dr), &linalg::rows(cols, 0, df));
    let frame = LagrangianFrame::new(&rest.product(first), swapped)?;
    let (theta, err) = snap(&frame, a.theta);
    if err > LIFT_TOL {
        return Err(Error::BadGrading(format!("exchange of factors moved the phase by {err:.3e}")));
    }
    GradedLagrangian::new(frame, theta, a.modulus)
}

/// Continuation of a grading along a path starting at its frame.
pub fn transport(a: &GradedLagrangian, path: &LagrangianPath) -> Result<GradedLagrangian> {
    if !same_space(a.space(), path.space()) {
        return Err(Error::SpaceMismatch("path and graded subspace live in different spaces".into()));
    }
    let start = path.frame(0.0)?;
    if start.distance(&a.frame) > 1e-7 {
        return Err(Error::Invalid("path does not start at the graded subspace".into()));
    }
    let end = path.frame(1.0)?;
    let (theta, err) = snap(&end, a.theta + maslov::winding_lift(path));
    if err > LIFT_TOL {
        return Err(Error::BadGrading(format!("phase lift off by {err:.3e}")));
    }
    GradedLagrangian::new(end, theta, a.modulus)
}

/// Concatenation of paths with time shares proportional to `weights`.
pub fn chain(pieces: &[(LagrangianPath, f64)]) -> LagrangianPath {
    let total: f64 = pieces.iter().map(|p| p.1).sum();
    let mut bounds = Vec::with_capacity(pieces.len() + 1);
    let mut acc = 0.0;
    bounds.push(0.0);
    for p in pieces {
        acc += p.1 / total;
        bounds.push(acc);
    }
    let paths: Vec<LagrangianPath> = pieces.iter().map(|p| p.0.clone()).collect();
    let res = pieces.iter().map(|p| p.0.resolution() as f64 * total / p.1).fold(0.0, f64::max).ceil() as usize;
    let sp = paths[0].space().clone();
    LagrangianPath::new(&sp, move |t| {
        let t = t.clamp(0.0, 1.0);
        let last = paths.len() - 1;
        let i = (0..=last).find(|&i| t <= bounds[i + 1]).unwrap_or(last);
        let w = bounds[i + 1] - bounds[i];
        paths[i].eval(((t - bounds[i]) / w).clamp(0.0, 1.0))
    })
    .with_resolution(res.max(2))
}

fn std_path<F>(sp: &SymplecticSpace, f: F) -> LagrangianPath
where
    F: Fn(f64) -> Mat + Send + Sync + 'static,
{
    let from = sp.from_std().clone();
    LagrangianPath::new(sp, move |t| &from * f(t))
}

/// The two-segment path from Λ⁻ × Λ to the diagonal of V⁻ × V:
/// e^{Jt}Λ⁻ × Λ for t ∈ [0, π/2], then {(tx + Jy, x + tJy)} for t ∈ [0, 1].
pub fn diagonal_path(aux: &LagrangianFrame) -> LagrangianPath {
    let v = aux.space().clone();
    let sp = v.dual().product(&v);
    let j = v.complex_structure();
    let f = aux.cols().clone();
    let jf = &j * &f;
    let (f1, j1) = (f.clone(), j.clone());
    let turn = LagrangianPath::new(&sp, move |t| {
        let a = t * PI / 2.0;
        let r = Mat::identity(j1.nrows(), j1.ncols()) * a.cos() + &j1 * a.sin();
        linalg::block_diag(&(r * &f1), &f1)
    });
    let stretch = LagrangianPath::new(&sp, move |t| {
        let top = linalg::hstack(&(&f * t), &jf);
        let bottom = linalg::hstack(&f, &(&jf * t));
        linalg::vstack(&top, &bottom)
    });
    chain(&[(turn.with_resolution(128), 1.0), (stretch.with_resolution(128), 1.0)])
}

/// Canonical grading of Δ ⊂ V⁻ × V, transported from Λ̃⁻ × Λ̃ along [`diagonal_path`].
pub fn canonical_diagonal_with(aux: &LagrangianFrame, modulus: i64) -> Result<GradedLagrangian> {
    check_modulus(modulus)?;
    let v = aux.space();
    let base = grade(aux, 0, modulus)?;
    let start = product_graded(&dual_graded(&base), &base)?;
    let mut out = transport(&start, &diagonal_path(aux))?;
    let diag = corrlin::diagonal(v);
    out.frame = diag.lag().clone();
    Ok(out)
}

pub fn canonical_diagonal(v: &SymplecticSpace, modulus: i64) -> Result<GradedLagrangian> {
    let aux = LagrangianFrame::from_std(v, &real_lagrangian(v.n()))?;
    canonical_diagonal_with(&aux, modulus)
}

fn check_pair(a: &GradedLagrangian, b: &GradedLagrangian) -> Result<()> {
    if a.modulus != b.modulus {
        return Err(Error::ModulusMismatch(a.modulus, b.modulus));
    }
    if !same_space(a.space(), b.space()) {
        return Err(Error::SpaceMismatch("graded subspaces live in different spaces".into()));
    }
    if !a.frame.transverse_to(&b.frame) {
        return Err(Error::NotTransverse("degree needs a transverse pair".into()));
    }
    Ok(())
}

fn reduce(x: i64, modulus: i64) -> i64 {
    x.rem_euclid(modulus)
}

/// Degree d(Λ̃a, Λ̃b) ∈ Z_N as −I′(γ, Λa) for a path γ from Λ̃a to Λ̃b that starts with the
/// positive arc e^{sJ}Λa. Falls back to paths through deterministic random waypoints when a
/// crossing is not regular.
pub fn degree(a: &GradedLagrangian, b: &GradedLagrangian) -> Result<i64> {
    check_pair(a, b)?;
    let mut last = None;
    for attempt in 0..DEGREE_ATTEMPTS {
        let waypoints: Vec<LagrangianFrame> = if attempt == 0 {
            Vec::new()
        } else {
            let mut rng = symplinalg::rng_from_seed(0x5eed ^ attempt);
            (0..attempt.min(2)).map(|_| symplinalg::random_lagrangian_rng(a.space(), &mut rng)).collect()
        };
        match degree_along(a, b, &waypoints) {
            Ok(d) => return Ok(d),
            Err(e @ (Error::IrregularCrossing { .. } | Error::Invalid(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// The path of [`degree_along`]: the positive arc, geodesics through `waypoints` to Λb, and a
/// rotation loop at Λb fixing the winding modulo N. Returns the path and its loop count.
pub fn degree_path(a: &GradedLagrangian, b: &GradedLagrangian, waypoints: &[LagrangianFrame]) -> Result<(LagrangianPath, i64)> {
    let sp = a.space().clone();
    let n = sp.n();
    let arc = LagrangianPath::rotation(&a.frame, DEGREE_ARC).with_resolution(24);
    let mut frames = vec![arc.frame(1.0)?];
    frames.extend(waypoints.iter().cloned());
    frames.push(b.frame.clone());
    let geo = LagrangianPath::from_samples(&frames)?.with_resolution(48 * (frames.len() - 1));
    let arc_wind = n as f64 * DEGREE_ARC / PI;
    let need = b.theta - a.theta - arc_wind - maslov::winding_lift(&geo);
    let k = need.round();
    if (need - k).abs() > LIFT_TOL {
        return Err(Error::BadGrading(format!("winding mismatch {:.3e}", need - k)));
    }
    // loops of Maslov index N close up in the N-fold cover
    let m = a.modulus;
    let mut k = (k as i64).rem_euclid(m);
    if k > m / 2 {
        k -= m;
    }
    let mut pieces = vec![(arc, 1.0), (geo, 2.0 * (frames.len() - 1) as f64)];
    if k != 0 {
        let u1 = linalg::to_complex(&b.frame.std());
        let turns = k as f64;
        let lp = std_path(&sp, move |t| {
            let mut u = u1.clone();
            let z = Complex64::from_polar(1.0, PI * turns * t);
            for i in 0..u.nrows() {
                u[(i, 0)] *= z;
            }
            linalg::to_real(&u)
        })
        .with_resolution(40 * k.unsigned_abs() as usize);
        pieces.push((lp, 2.0 * k.unsigned_abs() as f64));
    }
    Ok((chain(&pieces), k))
}

/// Degree computed along the path of [`degree_path`] through the given waypoints.
pub fn degree_along(a: &GradedLagrangian, b: &GradedLagrangian, waypoints: &[LagrangianFrame]) -> Result<i64> {
    check_pair(a, b)?;
    if a.n() == 0 {
        return Ok(reduce((a.theta - b.theta).round() as i64, a.modulus));
    }
    let (path, _) = degree_path(a, b, waypoints)?;
    let interior = maslov::rs_index_interior(&path, &a.frame)?;
    Ok(reduce(-interior, a.modulus))
}

/// Degree from the eigenphases e^{2iα_k}, α_k ∈ (0, π), of the relative invariant
/// W Wᵀ, W = U_a* U_b: d = Σα_k/π − (θb − θa).
pub fn degree_closed_form(a: &GradedLagrangian, b: &GradedLagrangian) -> Result<i64> {
    check_pair(a, b)?;
    let ua = linalg::to_complex(&a.frame.std());
    let ub = linalg::to_complex(&b.frame.std());
    let w = ua.adjoint() * ub;
    let s = &w * w.transpose();
    let (_, phases) = maslov::symmetric_unitary_diag(&s)?;
    let alpha: f64 = phases.iter().map(|p| (p / 2.0).rem_euclid(PI)).sum::<f64>() / PI;
    let x = alpha - (b.theta - a.theta);
    if (x - x.round()).abs() > LIFT_TOL {
        return Err(Error::BadGrading(format!("phase sum is not integral ({x:.6})")));
    }
    Ok(reduce(x.round() as i64, a.modulus))
}

// ---- graded correspondences ----

#[derive(Clone, Debug)]
pub struct GradedCorrespondence {
    corr: LinearCorrespondence,
    graded: GradedLagrangian,
}

impl GradedCorrespondence {
    pub fn new(corr: LinearCorrespondence, graded: GradedLagrangian) -> Result<Self> {
        if !same_space(corr.lag().space(), graded.space()) || corr.lag().distance(graded.frame()) > 1e-7 {
            return Err(Error::BadGrading("grading is not a lift of the correspondence".into()));
        }
        Ok(GradedCorrespondence { corr, graded })
    }

    pub fn graded_from(corr: &LinearCorrespondence, k: i64, modulus: i64) -> Result<Self> {
        Self::new(corr.clone(), grade(corr.lag(), k, modulus)?)
    }

    pub fn corr(&self) -> &LinearCorrespondence {
        &self.corr
    }

    pub fn graded(&self) -> &GradedLagrangian {
        &self.graded
    }

    pub fn modulus(&self) -> i64 {
        self.graded.modulus
    }
}

/// The complement Λ11 = {(v, −v)} ⊂ V × V⁻ of the diagonal, graded so that
/// d(Λ̃11, Δ̃⁻) = 0.
pub fn complement_grading(v: &SymplecticSpace, modulus: i64) -> Result<GradedLagrangian> {
    let d = v.dim();
    let anti = linalg::vstack(&Mat::identity(d, d), &(-Mat::identity(d, d)));
    let lam11 = LagrangianFrame::new(&v.product(&v.dual()), anti)?;
    let g = grade(&lam11, 0, modulus)?;
    let diag_dual = dual_graded(&canonical_diagonal(v, modulus)?);
    let c = degree(&g, &diag_dual)?;
    Ok(GradedLagrangian { theta: g.theta - c as f64, ..g })
}

/// Grading of L01 ∘ L12 induced by gradings of the factors: transport the product grading of
/// Λ01 × Λ12 along the contraction of the fiber to (Λ02 × Λ11)ᵀ and factor off the
/// complement grading of [`complement_grading`]. With this normalization the induced lift
/// satisfies ∘^N((Λ̃02 × Λ̃11)ᵀ) = Λ̃02 whenever d(Λ̃11, Δ̃⁻) = 0.
pub fn compose_graded(a: &GradedCorrespondence, b: &GradedCorrespondence) -> Result<GradedCorrespondence> {
    if a.modulus() != b.modulus() {
        return Err(Error::ModulusMismatch(a.modulus(), b.modulus()));
    }
    let modulus = a.modulus();
    if !corrlin::is_embedded_linear(&a.corr, &b.corr) {
        return Err(Error::NotEmbedded("graded composition needs a transverse, embedded composition".into()));
    }
    let (v0, v1, v2) = (a.corr.source().clone(), a.corr.target().clone(), b.corr.target().clone());
    let dims = (v0.n(), v1.n(), v2.n());
    let lam = corrlin::product_fiber(&a.corr, &b.corr)?;
    let start = GradedLagrangian::new(lam.clone(), a.graded.theta + b.graded.theta, modulus)
        .map_err(|e| Error::BadGrading(format!("product grading: {e}")))?;
    let l = lam.clone();
    let contraction = LagrangianPath::new(lam.space(), move |t| {
        corrlin::contract_fiber(&l, dims, t).expect("contraction stays transverse").cols().clone()
    })
    .with_resolution(64);
    let end = transport(&start, &contraction)?;

    let c02 = corrlin::compose(&a.corr, &b.corr)?.composed;
    let (d0, d1, d2) = (v0.dim(), v1.dim(), v2.dim());
    let g11 = complement_grading(&v1, modulus)?;

    let ecols = end.frame.cols();
    let reordered = linalg::vstack(
        &linalg::vstack(&linalg::rows(ecols, 0, d0), &linalg::rows(ecols, d0 + 2 * d1, d2)),
        &linalg::rows(ecols, d0, 2 * d1),
    );
    let split_space = corrlin::correspondence_space(&v0, &v2).product(g11.space());
    let split = LagrangianFrame::new(&split_space, reordered)?;
    let (theta_split, err) = snap(&split, end.theta);
    if err > LIFT_TOL {
        return Err(Error::BadGrading(format!("factor exchange moved the phase by {err:.3e}")));
    }
    let (theta, err) = snap(c02.lag(), theta_split - g11.theta);
    if err > LIFT_TOL {
        return Err(Error::BadGrading(format!("split grading does not factor ({err:.3e})")));
    }
    GradedCorrespondence::new(c02.clone(), GradedLagrangian::new(c02.lag().clone(), theta, modulus)?)
}

// ---- graded symplectomorphisms ----

/// Symplectic matrix with a sampled path from the identity.
#[derive(Clone, Debug)]
pub struct GradedSymplectic {
    space: SymplecticSpace,
    samples: Vec<Mat>,
    modulus: i64,
}

impl GradedSymplectic {
    pub fn new(space: &SymplecticSpace, samples: Vec<Mat>, modulus: i64) -> Result<Self> {
        check_modulus(modulus)?;
        let d = space.dim();
        let first = samples.first().ok_or_else(|| Error::Invalid("empty symplectic path".into()))?;
        if linalg::max_abs(&(first - Mat::identity(d, d))) > 1e-12 {
            return Err(Error::Invalid("symplectic path must start at the identity".into()));
        }
        for s in &samples {
            if s.nrows() != d || s.ncols() != d {
                return Err(Error::DimensionMismatch("symplectic path sample has the wrong size".into()));
            }
            let res = symplinalg::symplectic_residual(s, space);
            if res > 1e-9 * linalg::max_abs(s).powi(2).max(1.0) {
                return Err(Error::NotSymplectic(res));
            }
        }
        Ok(GradedSymplectic { space: space.clone(), samples, modulus })
    }

    /// Samples of t ↦ f(t) at `steps + 1` equally spaced times.
    pub fn from_fn<F: Fn(f64) -> Mat>(space: &SymplecticSpace, f: F, steps: usize, modulus: i64) -> Result<Self> {
        let steps = steps.max(1);
        Self::new(space, (0..=steps).map(|i| f(i as f64 / steps as f64)).collect(), modulus)
    }

    pub fn identity(space: &SymplecticSpace, modulus: i64) -> Result<Self> {
        let d = space.dim();
        Self::new(space, vec![Mat::identity(d, d)], modulus)
    }

    /// t ↦ exp(tΩᵀH) in a standard space.
    pub fn from_hamiltonian(h: &Mat, steps: usize, modulus: i64) -> Result<Self> {
        let sp = SymplecticSpace::standard(h.nrows() / 2);
        Self::from_fn(&sp, |t| symplinalg::symplectic_exp(&(h * t)), steps, modulus)
    }

    pub fn matrix(&self) -> &Mat {
        self.samples.last().expect("nonempty")
    }

    pub fn samples(&self) -> &[Mat] {
        &self.samples
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn modulus(&self) -> i64 {
        self.modulus
    }

    /// Pointwise product t ↦ other(t)·self(t); the paths share their sample grid unless one
    /// of them is the constant identity.
    pub fn then(&self, other: &GradedSymplectic) -> Result<GradedSymplectic> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        let (m, k) = (self.samples.len(), other.samples.len());
        if m != k && m != 1 && k != 1 {
            return Err(Error::Invalid("paths must share a sampling grid".into()));
        }
        let samples = (0..m.max(k))
            .map(|i| &other.samples[i.min(k - 1)] * &self.samples[i.min(m - 1)])
            .collect();
        GradedSymplectic::new(&self.space, samples, self.modulus)
    }
}

/// Grading of graph(φ) ⊂ V⁻ × V: the canonical diagonal continued along t ↦ graph(φ_t).
pub fn graph_grading(g: &GradedSymplectic) -> Result<GradedLagrangian> {
    let diag = canonical_diagonal(&g.space, g.modulus)?;
    if g.samples.len() == 1 {
        return Ok(diag);
    }
    let frames = g
        .samples
        .iter()
        .map(|s| corrlin::graph(s, &g.space).map(|c| c.lag().clone()))
        .collect::<Result<Vec<_>>>()?;
    let path = LagrangianPath::from_samples(&frames)?.with_resolution(8 * frames.len());
    transport(&diag, &path)
}

pub fn graded_graph(g: &GradedSymplectic) -> Result<GradedCorrespondence> {
    GradedCorrespondence::new(corrlin::graph(g.matrix(), &g.space)?, graph_grading(g)?)
}

// ---- degree identities ----

/// Both sides of the identity
/// d(Λ̃0 × Λ̃12, Λ̃01⁻ × Λ̃2⁻) = d(Λ̃0 × Δ̃1 × Λ̃2, Λ̃01⁻ × Λ̃12⁻)
/// for Λ0 ⊂ V0, Λ01 ⊂ V0⁻×V1, Λ12 ⊂ V1⁻×V2, Λ2 ⊂ V2⁻.
pub fn insert_diagonal_a(
    l0: &GradedLagrangian,
    l01: &GradedCorrespondence,
    l12: &GradedCorrespondence,
    l2: &GradedLagrangian,
) -> Result<(i64, i64)> {
    let modulus = l0.modulus;
    let v1 = l01.corr.target();
    let lhs = degree(
        &product_graded(l0, &l12.graded)?,
        &product_graded(&dual_graded(&l01.graded), &dual_graded(l2))?,
    )?;
    let diag = canonical_diagonal(v1, modulus)?;
    let rhs = degree(
        &product_graded(&product_graded(l0, &diag)?, l2)?,
        &product_graded(&dual_graded(&l01.graded), &dual_graded(&l12.graded))?,
    )?;
    Ok((lhs, rhs))
}

/// Both sides of d(Λ̃ × Δ̃0, (K̃ × Δ̃0⁻)ᵀ) = d(Λ̃, K̃ᵀ) for Λ ⊂ V0⁻×V1×V0, K ⊂ V0×V0⁻×V1,
/// with ᵀ the exchange V0 × W → W × V0.
pub fn insert_diagonal_b(
    v0: &SymplecticSpace,
    v1: &SymplecticSpace,
    lam: &GradedLagrangian,
    k: &GradedLagrangian,
) -> Result<(i64, i64)> {
    let modulus = lam.modulus;
    let diag = canonical_diagonal(v0, modulus)?;
    let w = v0.dual().product(v1);
    let left = product_graded(lam, &diag)?;
    let kd = product_graded(k, &dual_graded(&diag))?;
    let kd_t = transpose_graded(&kd, v0, &w.product(&v0.dual().product(v0).dual()))?;
    let lhs = degree(&left, &kd_t)?;
    let rhs = degree(lam, &transpose_graded(k, v0, &w)?)?;
    Ok((lhs, rhs))
}

/// Degrees d(Λ̃0 × Λ̃12, Λ̃01⁻ × Λ̃2⁻) through the triple and d(Λ̃0 × Λ̃2, Λ̃02⁻) through the
/// graded composition Λ̃02 = Λ̃01 ∘^N Λ̃12.
pub fn composition_degrees(
    l0: &GradedLagrangian,
    l01: &GradedCorrespondence,
    l12: &GradedCorrespondence,
    l2: &GradedLagrangian,
) -> Result<(i64, i64)> {
    let triple = degree(
        &product_graded(l0, &l12.graded)?,
        &product_graded(&dual_graded(&l01.graded), &dual_graded(l2))?,
    )?;
    let c02 = compose_graded(l01, l12)?;
    let through = degree(&product_graded(l0, l2)?, &dual_graded(&c02.graded))?;
    Ok((triple, through))
}

/// Evaluates the insertion identities; true when both sides agree in Z_N.
pub fn insert_diagonal_degree_check(
    l0: &GradedLagrangian,
    l01: &GradedCorrespondence,
    l12: &GradedCorrespondence,
    l2: &GradedLagrangian,
) -> Result<bool> {
    let (l, r) = insert_diagonal_a(l0, l01, l12, l2)?;
    Ok(l == r)
}

/// Random graded Lagrangian with a uniformly chosen lift.
pub fn random_graded<R: Rng>(space: &SymplecticSpace, modulus: i64, rng: &mut R) -> GradedLagrangian {
    let f = symplinalg::random_lagrangian_rng(space, rng);
    let k = rng.random_range(0..modulus);
    grade(&f, k, modulus).expect("modulus checked by caller")
}

pub fn random_graded_corr<R: Rng>(
    source: &SymplecticSpace,
    target: &SymplecticSpace,
    modulus: i64,
    rng: &mut R,
) -> GradedCorrespondence {
    let c = corrlin::random_correspondence(source, target, rng);
    let k = rng.random_range(0..modulus);
    GradedCorrespondence::graded_from(&c, k, modulus).expect("modulus checked by caller")
}

// ---- JSON ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradedJson {
    #[serde(flatten)]
    pub frame: FrameJson,
    pub theta: f64,
    #[serde(rename = "N")]
    pub modulus: i64,
}

impl GradedJson {
    pub fn from_graded(g: &GradedLagrangian) -> Self {
        GradedJson { frame: FrameJson::from_frame(&g.frame), theta: g.theta, modulus: g.modulus }
    }

    pub fn to_graded(&self) -> Result<GradedLagrangian> {
        GradedLagrangian::new(self.frame.to_frame()?, self.theta, self.modulus)
    }
}
