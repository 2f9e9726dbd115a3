//! Crossings and Robbin–Salamon indices of pairs of Lagrangian paths, with a
//! det² winding oracle.
//!
//! Sign convention: the crossing form of (γ0, γ1) is Q(γ0) − Q(γ1), where Q(γ) is the
//! derivative of the graph map of γ over J·γ(s). A line rotating counterclockwise against
//! a fixed line crosses positively, so I(e^{iπt}R, R) = 1.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat};
use crate::symplinalg::{standard_j, FrameJson, LagrangianFrame, Subspace, SymplecticSpace};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use num_rational::Rational64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub const DEFAULT_RESOLUTION: usize = 512;
/// Maximal subspace distance between consecutive samples.
pub const CONTINUITY_GUARD: f64 = 0.2;
const MAX_DEPTH: usize = 40;
const MIN_WIDTH: f64 = 1e-10;
const CROSSING_TOL: f64 = 1e-8;
const KERNEL_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-5;
const REGULARITY_TOL: f64 = 1e-6;
const EVAL_BUDGET: usize = 400_000;

type EvalFn = dyn Fn(f64) -> Mat + Send + Sync;

/// Path of Lagrangian subspaces; `eval(t)` returns a basis in native coordinates of the ambient space.
#[derive(Clone)]
pub struct LagrangianPath {
    space: SymplecticSpace,
    f: Arc<EvalFn>,
    resolution: usize,
}

impl std::fmt::Debug for LagrangianPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangianPath").field("n", &self.space.n()).field("resolution", &self.resolution).finish()
    }
}

impl LagrangianPath {
    pub fn new<F>(space: &SymplecticSpace, f: F) -> Self
    where
        F: Fn(f64) -> Mat + Send + Sync + 'static,
    {
        LagrangianPath { space: space.clone(), f: Arc::new(f), resolution: DEFAULT_RESOLUTION }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution.max(2);
        self
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn eval(&self, t: f64) -> Mat {
        (self.f)(t)
    }

    /// Orthonormal frame of γ(t) in standard coordinates.
    pub fn std_at(&self, t: f64) -> Mat {
        linalg::qr_orth(&(self.space.to_std() * (self.f)(t)))
    }

    pub fn frame(&self, t: f64) -> Result<LagrangianFrame> {
        LagrangianFrame::new(&self.space, self.eval(t))
    }

    pub fn constant(frame: &LagrangianFrame) -> Self {
        let cols = frame.cols().clone();
        Self::new(frame.space(), move |_| cols.clone()).with_resolution(2)
    }

    /// t ↦ e^{i·angle·t}·Λ in standard coordinates of a standard space.
    pub fn rotation(frame: &LagrangianFrame, angle: f64) -> Self {
        let n = frame.n();
        let sp = frame.space().clone();
        let g = frame.std();
        let from = sp.from_std().clone();
        Self::new(&sp, move |t| &from * crate::symplinalg::rotation(n, angle * t) * &g)
    }

    /// t ↦ e^{i·angle·t}·R^n.
    pub fn standard_rotation(n: usize, angle: f64) -> Self {
        let sp = SymplecticSpace::standard(n);
        let base = real_lagrangian(n);
        Self::rotation(&LagrangianFrame::new(&sp, base).expect("R^n is Lagrangian"), angle)
    }

    pub fn reversed(&self) -> Self {
        let f = self.f.clone();
        LagrangianPath { space: self.space.clone(), f: Arc::new(move |t| f(1.0 - t)), resolution: self.resolution }
    }

    /// t ↦ γ(g(t)) for a reparametrization g of [0,1].
    pub fn reparametrized<G>(&self, g: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f = self.f.clone();
        LagrangianPath { space: self.space.clone(), f: Arc::new(move |t| f(g(t))), resolution: self.resolution }
    }

    /// Restriction to [a, b], rescaled to [0, 1].
    pub fn restricted(&self, a: f64, b: f64) -> Self {
        self.reparametrized(move |t| a + (b - a) * t)
    }

    /// First `self` on [0, ½], then `other` on [½, 1].
    pub fn concat(&self, other: &LagrangianPath) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        LagrangianPath {
            space: self.space.clone(),
            f: Arc::new(move |t| if t <= 0.5 { f(2.0 * t) } else { g(2.0 * t - 1.0) }),
            resolution: self.resolution.max(other.resolution),
        }
    }

    pub fn product(&self, other: &LagrangianPath) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        LagrangianPath {
            space: self.space.product(&other.space),
            f: Arc::new(move |t| linalg::block_diag(&f(t), &g(t))),
            resolution: self.resolution.max(other.resolution),
        }
    }

    /// Image under a linear map `m` onto `target`.
    pub fn mapped(&self, target: &SymplecticSpace, m: &Mat) -> Self {
        let f = self.f.clone();
        let m = m.clone();
        LagrangianPath { space: target.clone(), f: Arc::new(move |t| &m * f(t)), resolution: self.resolution }
    }

    /// The same path in the dual space.
    pub fn dual(&self) -> Self {
        LagrangianPath { space: self.space.dual(), f: self.f.clone(), resolution: self.resolution }
    }

    /// Constant rotation e^{εJ} of every frame; used to move crossings off degenerate positions.
    pub fn perturbed(&self, eps: f64) -> Self {
        let n = self.n();
        let r = self.space.from_std() * crate::symplinalg::rotation(n, eps) * self.space.to_std();
        self.mapped(&self.space.clone(), &r)
    }

    /// Piecewise geodesic interpolation through the given frames at equally spaced times.
    pub fn from_samples(frames: &[LagrangianFrame]) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Invalid("a sampled path needs at least one frame".into()));
        }
        let sp = frames[0].space().clone();
        if frames.iter().any(|f| f.space().dim() != sp.dim()) {
            return Err(Error::DimensionMismatch("frames of a path live in different spaces".into()));
        }
        if frames.len() == 1 {
            return Ok(Self::constant(&frames[0]));
        }
        let segs: Vec<Geodesic> = frames.windows(2).map(|w| Geodesic::new(&w[0].std(), &w[1].std())).collect();
        let m = segs.len();
        let from = sp.from_std().clone();
        Ok(Self::new(&sp, move |t| {
            let x = (t.clamp(0.0, 1.0) * m as f64).min(m as f64 - 1e-300);
            let i = (x.floor() as usize).min(m - 1);
            &from * segs[i].at(t * m as f64 - i as f64)
        }))
    }

    /// Lagrangian invariant and the continuity guard on the sample grid.
    pub fn check(&self) -> Result<()> {
        let mut prev: Option<Mat> = None;
        for i in 0..=self.resolution {
            let t = i as f64 / self.resolution as f64;
            let g = self.std_at(t);
            let res = linalg::max_abs(&(g.transpose() * crate::symplinalg::standard_form(self.n()) * &g));
            if res > 1e-8 {
                return Err(Error::NotLagrangian(res));
            }
            if let Some(p) = &prev {
                if frame_step(p, &g) >= CONTINUITY_GUARD {
                    return Err(Error::Discontinuous(i - 1, i));
                }
            }
            prev = Some(g);
        }
        Ok(())
    }
}

/// Frame of R^n ⊂ C^n.
pub fn real_lagrangian(n: usize) -> Mat {
    linalg::vstack(&Mat::identity(n, n), &Mat::zeros(n, n))
}

/// Unitary n×n matrix X + iY of an orthonormal Lagrangian frame in standard coordinates.
pub fn unitary_of(frame: &Mat) -> CMat {
    linalg::to_complex(frame)
}

/// Decomposition S = Q diag(e^{iφ_k}) Qᵀ of a symmetric unitary matrix with Q real orthogonal.
pub fn symmetric_unitary_diag(s: &CMat) -> Result<(Mat, Vec<f64>)> {
    let n = s.nrows();
    if n == 0 {
        return Ok((Mat::zeros(0, 0), Vec::new()));
    }
    let re = Mat::from_fn(n, n, |i, j| s[(i, j)].re);
    let im = Mat::from_fn(n, n, |i, j| s[(i, j)].im);
    for k in 0..8 {
        let phi = 0.7368 + 1.2345 * k as f64;
        let m = linalg::symmetrize(&(&re * phi.cos() + &im * phi.sin()));
        let eig = SymmetricEigen::new(m);
        let q = eig.eigenvectors;
        let qc = q.map(|x| Complex64::new(x, 0.0));
        let d = qc.transpose() * s * &qc;
        let mut off = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off.max(d[(i, j)].norm());
                }
            }
        }
        if off < 1e-9 {
            let phases = (0..n).map(|i| d[(i, i)].arg()).collect();
            return Ok((q, phases));
        }
    }
    Err(Error::Invalid("symmetric unitary matrix could not be diagonalized by a real rotation".into()))
}

/// Shortest unitary geodesic between two Lagrangians given by standard orthonormal frames.
#[derive(Clone, Debug)]
struct Geodesic {
    base: CMat,
    alpha: Vec<f64>,
}

impl Geodesic {
    fn new(a: &Mat, b: &Mat) -> Self {
        let ua = unitary_of(a);
        let ub = unitary_of(b);
        let w = ua.adjoint() * &ub;
        let s = &w * w.transpose();
        let (q, phases) = symmetric_unitary_diag(&s).expect("relative invariant is symmetric unitary");
        let qc = q.map(|x| Complex64::new(x, 0.0));
        Geodesic { base: ua * qc, alpha: phases.iter().map(|p| p / 2.0).collect() }
    }

    fn at(&self, t: f64) -> Mat {
        let n = self.alpha.len();
        let d = CMat::from_fn(n, n, |i, j| if i == j { Complex64::from_polar(1.0, t * self.alpha[i]) } else { Complex64::new(0.0, 0.0) });
        linalg::to_real(&(&self.base * d))
    }
}

/// Smallest sine of the principal angles between two Lagrangian frames (standard coordinates).
fn sigma(f0: &Mat, f1: &Mat) -> f64 {
    let n = f0.ncols();
    if n == 0 {
        return f64::INFINITY;
    }
    let m = f0.transpose() * standard_j(n) * f1;
    linalg::singular_values(&m).last().copied().unwrap_or(0.0)
}

/// Upper bound for the largest principal angle between two orthonormal frames of equal
/// dimension: sin²θ_max ≤ Σ sin²θ_k = ‖F1 − F0 F0ᵀ F1‖²_F.
fn angle_bound(f0: &Mat, f1: &Mat) -> f64 {
    let r = f1 - f0 * (f0.transpose() * f1);
    r.norm().min(1.0).asin()
}

fn frame_step(f0: &Mat, f1: &Mat) -> f64 {
    let b = angle_bound(f0, f1).sin();
    if b < CONTINUITY_GUARD {
        b
    } else {
        linalg::gap(f0, f1)
    }
}

#[derive(Clone, Debug)]
pub struct CrossingRecord {
    pub s: f64,
    pub kernel: Subspace,
    pub form: Mat,
    pub eigenvalues: Vec<f64>,
    pub signature: i64,
    pub endpoint: bool,
    pub regular: bool,
}

impl CrossingRecord {
    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }
}

struct Sampler<'a> {
    g0: &'a LagrangianPath,
    g1: &'a LagrangianPath,
    budget: std::cell::Cell<usize>,
}

struct Sample {
    s: f64,
    f0: Mat,
    f1: Mat,
    sigma: f64,
}

impl Sampler<'_> {
    fn sample(&self, s: f64) -> Sample {
        self.budget.set(self.budget.get().saturating_sub(1));
        let f0 = self.g0.std_at(s);
        let f1 = self.g1.std_at(s);
        let sg = sigma(&f0, &f1);
        Sample { s, f0, f1, sigma: sg }
    }

    fn refine(&self, a: &Sample, b: &Sample, depth: usize, leaves: &mut Vec<(f64, f64)>) {
        if self.budget.get() == 0 {
            return;
        }
        let m = self.sample(0.5 * (a.s + b.s));
        let motion = angle_bound(&a.f0, &m.f0) + angle_bound(&m.f0, &b.f0) + angle_bound(&a.f1, &m.f1) + angle_bound(&m.f1, &b.f1);
        if a.sigma + b.sigma > 1.5 * motion + 1e-14 {
            return;
        }
        if depth >= MAX_DEPTH || b.s - a.s < MIN_WIDTH {
            let best = [a, &m, b].into_iter().min_by(|x, y| x.sigma.total_cmp(&y.sigma)).expect("three samples");
            leaves.push((best.s, best.sigma));
            return;
        }
        self.refine(a, &m, depth + 1, leaves);
        self.refine(&m, b, depth + 1, leaves);
    }
}

/// Graph map of γ(s + t) over J·γ(s) as a symmetric matrix on γ(s).
fn graph_map(f: &Mat, g: &Mat) -> Mat {
    let n = f.ncols();
    let jf = standard_j(n) * f;
    let a = f.transpose() * g;
    let b = jf.transpose() * g;
    match a.clone().try_inverse() {
        Some(ai) => linalg::symmetrize(&(b * ai)),
        None => Mat::from_element(n, n, f64::NAN),
    }
}

/// Derivative at s of the graph map of a path over its tangent position, in the coordinates of `f`.
fn graph_derivative(path: &LagrangianPath, s: f64, f: &Mat) -> Mat {
    let h = FD_STEP;
    let m = |t: f64| graph_map(f, &path.std_at(t));
    if s - 2.0 * h >= 0.0 && s + 2.0 * h <= 1.0 {
        let d1 = (m(s + h) - m(s - h)) / (2.0 * h);
        let d2 = (m(s + 2.0 * h) - m(s - 2.0 * h)) / (4.0 * h);
        (d1 * 4.0 - d2) / 3.0
    } else if s + 2.0 * h <= 1.0 {
        (m(s + h) * 4.0 - m(s + 2.0 * h) - m(s) * 3.0) / (2.0 * h)
    } else {
        (m(s) * 3.0 - m(s - h) * 4.0 + m(s - 2.0 * h)) / (2.0 * h)
    }
}

fn crossing_at(g0: &LagrangianPath, g1: &LagrangianPath, s: f64, endpoint: bool) -> CrossingRecord {
    let f0 = g0.std_at(s);
    let f1 = g1.std_at(s);
    let n = f0.ncols();
    let m = f0.transpose() * standard_j(n) * &f1;
    let (u, sv, _) = linalg::svd(&m);
    let k = sv.iter().filter(|&&x| x < KERNEL_TOL).count();
    let a0 = u.columns(n - k, k).into_owned();
    let kernel_std = &f0 * &a0;
    let q0 = graph_derivative(g0, s, &f0);
    let q1 = graph_derivative(g1, s, &f1);
    let k0 = f0.transpose() * &kernel_std;
    let k1 = f1.transpose() * &kernel_std;
    let form = linalg::symmetrize(&(k0.transpose() * q0 * &k0 - k1.transpose() * q1 * &k1));
    let eig = linalg::sym_eigenvalues(&form);
    let scale = linalg::max_abs(&form).max(1.0);
    let regular = eig.iter().all(|e| e.abs() > REGULARITY_TOL * scale);
    let signature = eig.iter().filter(|&&e| e > REGULARITY_TOL * scale).count() as i64
        - eig.iter().filter(|&&e| e < -REGULARITY_TOL * scale).count() as i64;
    let sp = g0.space();
    let kernel = Subspace::span(sp, &sp.native_frame(&kernel_std));
    CrossingRecord { s, kernel, form, eigenvalues: eig, signature, endpoint, regular }
}

/// Golden-section minimization of σ near a candidate.
fn polish(sampler: &Sampler, lo: f64, hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo.max(0.0), hi.min(1.0));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = sampler.sample(c).sigma;
    let mut fd = sampler.sample(d).sigma;
    for _ in 0..200 {
        if b - a < 1e-15 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = sampler.sample(c).sigma;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = sampler.sample(d).sigma;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn check_pair(g0: &LagrangianPath, g1: &LagrangianPath) -> Result<()> {
    if g0.space().dim() != g1.space().dim() {
        return Err(Error::DimensionMismatch(format!(
            "paths in spaces of dimension {} and {}",
            g0.space().dim(),
            g1.space().dim()
        )));
    }
    Ok(())
}

/// All s ∈ [0,1] with γ0(s) ∩ γ1(s) ≠ 0, with crossing forms.
pub fn find_crossings(g0: &LagrangianPath, g1: &LagrangianPath) -> Result<Vec<CrossingRecord>> {
    check_pair(g0, g1)?;
    if g0.n() == 0 {
        return Ok(Vec::new());
    }
    let sampler = Sampler { g0, g1, budget: std::cell::Cell::new(EVAL_BUDGET) };
    let res = g0.resolution().max(g1.resolution());
    let samples: Vec<Sample> = (0..=res).map(|i| sampler.sample(i as f64 / res as f64)).collect();
    for i in 0..res {
        let (a, b) = (&samples[i], &samples[i + 1]);
        if frame_step(&a.f0, &b.f0) >= CONTINUITY_GUARD || frame_step(&a.f1, &b.f1) >= CONTINUITY_GUARD {
            return Err(Error::Discontinuous(i, i + 1));
        }
    }
    let start_cross = samples[0].sigma < CROSSING_TOL;
    let end_cross = samples[res].sigma < CROSSING_TOL;

    let mut leaves = Vec::new();
    for w in samples.windows(2) {
        sampler.refine(&w[0], &w[1], 0, &mut leaves);
    }
    if sampler.budget.get() == 0 {
        return Err(Error::Invalid("crossings are not isolated (evaluation budget exhausted)".into()));
    }
    leaves.sort_by(|x, y| x.0.total_cmp(&y.0));

    // cluster leaves and polish each cluster to a single minimum
    let mut hits: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < leaves.len() {
        let mut j = i;
        while j + 1 < leaves.len() && leaves[j + 1].0 - leaves[j].0 < 1e-9 {
            j += 1;
        }
        let (lo, hi) = (leaves[i].0, leaves[j].0);
        let w = (hi - lo).max(1e-12);
        let (s, sg) = polish(&sampler, lo - w, hi + w);
        let best = (i..=j).map(|k| leaves[k]).fold((s, sg), |acc, l| if l.1 < acc.1 { l } else { acc });
        if best.1 < CROSSING_TOL {
            hits.push(best.0);
        }
        i = j + 1;
    }
    hits.sort_by(|x, y| x.total_cmp(y));
    hits.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut out = Vec::new();
    if start_cross {
        out.push(crossing_at(g0, g1, 0.0, true));
    }
    for s in hits {
        if (start_cross && s < 1e-9) || (end_cross && s > 1.0 - 1e-9) {
            continue;
        }
        if s <= 0.0 || s >= 1.0 {
            continue;
        }
        out.push(crossing_at(g0, g1, s, false));
    }
    if end_cross {
        out.push(crossing_at(g0, g1, 1.0, true));
    }
    Ok(out)
}

fn first_irregular(cs: &[CrossingRecord]) -> Option<Error> {
    cs.iter().find(|c| !c.regular).map(|c| {
        let eig = c.eigenvalues.iter().copied().fold(f64::INFINITY, |m, e| if e.abs() < m.abs() { e } else { m });
        Error::IrregularCrossing { s: c.s, eig }
    })
}

/// Robbin–Salamon index with endpoint crossings weighted by ½.
pub fn rs_index(g0: &LagrangianPath, g1: &LagrangianPath) -> Result<Rational64> {
    let cs = find_crossings(g0, g1)?;
    if let Some(e) = first_irregular(&cs) {
        return Err(e);
    }
    let twice: i64 = cs.iter().map(|c| if c.endpoint { c.signature } else { 2 * c.signature }).sum();
    Ok(Rational64::new(twice, 2))
}

/// Index of γ relative to a fixed Λ, counting interior crossings only.
pub fn rs_index_interior(g: &LagrangianPath, lam: &LagrangianFrame) -> Result<i64> {
    let c = LagrangianPath::constant(lam);
    let cs = find_crossings(g, &c)?;
    let interior: Vec<CrossingRecord> = cs.into_iter().filter(|c| !c.endpoint).collect();
    if let Some(e) = first_irregular(&interior) {
        return Err(e);
    }
    Ok(interior.iter().map(|c| c.signature).sum())
}

/// Continuous lift of arg det²(X+iY) along the path, divided by 2π.
pub fn winding_lift(g: &LagrangianPath) -> f64 {
    let n = g.n();
    if n == 0 {
        return 0.0;
    }
    let max_step = (PI / (4.0 * n as f64)).sin();
    let res = g.resolution();
    let mut total = 0.0;
    let mut prev_s = 0.0;
    let mut prev = g.std_at(0.0);
    for i in 1..=res {
        let s = i as f64 / res as f64;
        let cur = g.std_at(s);
        total += lift_segment(g, prev_s, &prev, s, &cur, max_step, 0);
        prev_s = s;
        prev = cur;
    }
    total / (2.0 * PI)
}

fn lift_segment(g: &LagrangianPath, a: f64, fa: &Mat, b: f64, fb: &Mat, max_step: f64, depth: usize) -> f64 {
    if angle_bound(fa, fb).sin() < max_step || depth >= 50 {
        let da = linalg::det2_phase(fa);
        let db = linalg::det2_phase(fb);
        return (db / da).arg();
    }
    let m = 0.5 * (a + b);
    let fm = g.std_at(m);
    lift_segment(g, a, fa, m, &fm, max_step, depth + 1) + lift_segment(g, m, &fm, b, fb, max_step, depth + 1)
}

/// Loop index from crossings against a fixed Lagrangian transverse to the endpoints.
pub fn loop_index(g: &LagrangianPath, reference: &LagrangianFrame) -> Result<Rational64> {
    rs_index(g, &LagrangianPath::constant(reference))
}

/// Random loop t ↦ exp(i sin(πt) H)·G·diag(e^{iπ m_j t})·R^n with Hermitian H and unitary G;
/// returns the loop and its Maslov index Σ m_j.
pub fn random_loop<R: Rng>(n: usize, max_wind: i64, rng: &mut R) -> (LagrangianPath, i64) {
    let g = crate::symplinalg::random_unitary(n, rng);
    let h = {
        let a = CMat::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
    };
    let ih = crate::symplinalg::unitary_as_real(&(h * Complex64::new(0.0, 1.0)));
    let m: Vec<i64> = (0..n).map(|_| rng.random_range(-max_wind..=max_wind)).collect();
    let total = m.iter().sum();
    let sp = SymplecticSpace::standard(n);
    let path = LagrangianPath::new(&sp, move |t| {
        let d = CMat::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, PI * m[i] as f64 * t)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        (&ih * (PI * t).sin()).exp() * linalg::to_real(&(&g * d))
    });
    (path, total)
}

/// Half-integer as the usual string: "3/2", "-1/2", "2".
pub fn format_half(x: Rational64) -> String {
    if *x.denom() == 1 {
        format!("{}", x.numer())
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

// ---- JSON ----

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathJson {
    Samples {
        samples: Vec<FrameJson>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolution: Option<usize>,
    },
    Analytic {
        kind: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<FrameJson>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolution: Option<usize>,
    },
}

impl PathJson {
    pub fn to_path(&self) -> Result<LagrangianPath> {
        match self {
            PathJson::Samples { samples, resolution } => {
                let frames = samples.iter().map(|f| f.to_frame()).collect::<Result<Vec<_>>>()?;
                let p = LagrangianPath::from_samples(&frames)?;
                Ok(match resolution {
                    Some(r) => p.with_resolution(*r),
                    None => p.with_resolution(DEFAULT_RESOLUTION.max(8 * frames.len())),
                })
            }
            PathJson::Analytic { kind, angle, n, base, resolution } => {
                let base = match (base, n) {
                    (Some(b), _) => b.to_frame()?,
                    (None, Some(n)) => LagrangianFrame::new(&SymplecticSpace::standard(*n), real_lagrangian(*n))?,
                    (None, None) => return Err(Error::Invalid("analytic path needs 'n' or 'base'".into())),
                };
                let p = match kind.as_str() {
                    "rotation" => {
                        let a = angle.ok_or_else(|| Error::Invalid("rotation path needs 'angle'".into()))?;
                        LagrangianPath::rotation(&base, a)
                    }
                    "constant" => LagrangianPath::constant(&base),
                    other => return Err(Error::Invalid(format!("unknown path kind '{other}'"))),
                };
                Ok(match resolution {
                    Some(r) => p.with_resolution(*r),
                    None => p,
                })
            }
        }
    }
}
