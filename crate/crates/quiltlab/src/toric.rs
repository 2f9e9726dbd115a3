//! CP^n with its torus action: moment maps, Clifford tori, the reduction correspondences
//! Σ_{(k,…,n)} and Σ_j, their compositions, and generator enumeration for chains of them.
//!
//! Every object is a moment-level description: prescribed values |z_j|²/|z|² = q_j on each
//! side and a coordinate link [x_{s_0} : x_{s_1} : …] = [z_{t_0} : z_{t_1} : …]. Moment values
//! are μ_j = π|z_j|²/|z|², so levels are stored as exact rationals q with μ = πq.

use crate::corrlin::{self, LinearCorrespondence};
use crate::error::{Error, Result};
use crate::intlin::{self, IMat};
use crate::linalg::{self, Mat};
use crate::quilt::GradedChainComplex;
use crate::symplinalg::{self, SymplecticSpace};
use num_complex::Complex64;
use num_rational::Rational64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Q = Rational64;

/// Modulus used for toric generators: degrees are Morse indices mod 2.
pub const TORIC_MODULUS: i64 = 2;
pub const MOMENT_TOL: f64 = 1e-12;
/// Points whose chart coordinate z_0 is smaller than this are resampled.
const CHART_FLOOR: f64 = 0.05;

fn q(a: i64, b: i64) -> Q {
    Q::new(a, b)
}

fn qf(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

// ---- points ----

/// [z_0 : … : z_n] stored with |z| = 1 and the first nonzero coordinate real positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    z: Vec<Complex64>,
}

impl ProjectivePoint {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if z.is_empty() || !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::Invalid("homogeneous coordinates must be a nonzero vector".into()));
        }
        let lead = z.iter().find(|c| c.norm() > 1e-14 * norm).copied().unwrap_or(z[0]);
        let phase = lead.conj() / lead.norm();
        Ok(ProjectivePoint { z: z.iter().map(|c| c * phase / norm).collect() })
    }

    /// The point of CP^0.
    pub fn point() -> Self {
        ProjectivePoint { z: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.z
    }

    /// Complex dimension n of the ambient CP^n.
    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    /// μ_j = π|z_j|²/|z|².
    pub fn moment(&self, j: usize) -> Result<f64> {
        self.z.get(j).map(|c| PI * c.norm_sqr()).ok_or_else(|| Error::Invalid(format!("no coordinate z_{j} in CP^{}", self.n())))
    }

    pub fn moments(&self) -> Vec<f64> {
        self.z.iter().map(|c| PI * c.norm_sqr()).collect()
    }

    /// Distance in the Fubini–Study sense, sqrt(1 − |⟨z, w⟩|²).
    pub fn distance(&self, other: &ProjectivePoint) -> f64 {
        if self.z.len() != other.z.len() {
            return f64::INFINITY;
        }
        let ip: Complex64 = self.z.iter().zip(&other.z).map(|(a, b)| a.conj() * b).sum();
        (1.0 - ip.norm_sqr()).max(0.0).sqrt()
    }

    /// Affine chart w_i = z_i / z_0, i = 1..n.
    pub fn chart(&self) -> Result<Vec<Complex64>> {
        let z0 = self.z[0];
        if z0.norm() < 1e-9 {
            return Err(Error::Invalid("point lies outside the chart z_0 ≠ 0".into()));
        }
        Ok(self.z[1..].iter().map(|c| c / z0).collect())
    }

    pub fn from_chart(w: &[Complex64]) -> Self {
        let mut z = vec![Complex64::new(1.0, 0.0)];
        z.extend_from_slice(w);
        ProjectivePoint::new(z).expect("first coordinate is one")
    }

    /// Real chart coordinates (Re w_1, …, Re w_n, Im w_1, …, Im w_n).
    pub fn real_chart(&self) -> Result<Vec<f64>> {
        let w = self.chart()?;
        Ok(w.iter().map(|c| c.re).chain(w.iter().map(|c| c.im)).collect())
    }

    /// Phases arg(z_i / z_0) / 2π in [0, 1), i = 1..n.
    pub fn phases(&self) -> Result<Vec<f64>> {
        Ok(self.chart()?.iter().map(|c| (c.arg() / (2.0 * PI)).rem_euclid(1.0)).collect())
    }
}

pub fn moment(z: &ProjectivePoint, j: usize) -> Result<f64> {
    z.moment(j)
}

fn random_unit<R: Rng>(len: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> =
            (0..len).map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect();
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

pub fn random_point<R: Rng>(n: usize, rng: &mut R) -> ProjectivePoint {
    ProjectivePoint::new(random_unit(n + 1, rng)).expect("nonzero")
}

// ---- spaces ----

/// CP^n with the Fubini–Study form scaled by `scale` (lines have area scale·π).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProjSpace {
    pub n: usize,
    #[serde(with = "rational_string")]
    pub scale: Q,
}

impl ProjSpace {
    pub fn standard(n: usize) -> Self {
        ProjSpace { n, scale: q(1, 1) }
    }

    pub fn point() -> Self {
        Self::standard(0)
    }

    /// The reduced space CP^{k−1} of CP^n at the level μ_k = … = μ_n = π/(n+1).
    pub fn reduced(k: usize, n: usize) -> Result<Self> {
        Ok(ProjSpace { n: k - 1, scale: reduced_space_scale(k, n)? })
    }

    /// Symplectic area of a line, as a multiple of π.
    pub fn line_area(&self) -> Q {
        self.scale
    }

    /// First Chern number of a line.
    pub fn chern(&self) -> i64 {
        self.n as i64 + 1
    }

    /// Monotonicity constant as a multiple of π: line area over Chern number.
    pub fn tau(&self) -> Q {
        self.line_area() / self.chern()
    }

    /// The scaled Fubini–Study form in the real chart at `p`:
    /// ω(u, v) = scale · Im(u* M v), M = I/(1+|w|²) − w w*/(1+|w|²)².
    pub fn form_at(&self, p: &ProjectivePoint) -> Result<Mat> {
        let m = self.n;
        let w = p.chart()?;
        let d = 1.0 + w.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let mm = nalgebra::DMatrix::<Complex64>::from_fn(m, m, |i, j| {
            let delta = if i == j { Complex64::new(1.0 / d, 0.0) } else { Complex64::new(0.0, 0.0) };
            delta - w[i] * w[j].conj() / (d * d)
        });
        let basis = |p: usize| -> (usize, Complex64) {
            if p < m {
                (p, Complex64::new(1.0, 0.0))
            } else {
                (p - m, Complex64::new(0.0, 1.0))
            }
        };
        let s = qf(self.scale);
        Ok(Mat::from_fn(2 * m, 2 * m, |a, b| {
            let (i, ca) = basis(a);
            let (j, cb) = basis(b);
            s * (ca.conj() * mm[(i, j)] * cb).im
        }))
    }

    pub fn space_at(&self, p: &ProjectivePoint) -> Result<SymplecticSpace> {
        if self.n == 0 {
            return Ok(SymplecticSpace::point());
        }
        SymplecticSpace::from_form(self.form_at(p)?)
    }
}

/// Scale of the Fubini–Study form on the reduced space CP^{k−1} of CP^n at the level
/// μ_k = … = μ_n = π/(n+1): the sphere Σ_{i<k}|z_i|² = k/(n+1) divided by S¹.
pub fn reduced_space_scale(k: usize, n: usize) -> Result<Q> {
    if k < 1 || k > n {
        return Err(Error::Invalid(format!("reduction index k = {k} outside 1..={n}")));
    }
    Ok(q(k as i64, n as i64 + 1))
}

/// Monotonicity constants (multiples of π) of CP^n and of its reduced spaces CP^{k−1},
/// 2 ≤ k ≤ n, read off from polytope edge lengths and Chern numbers.
#[derive(Clone, Debug, Serialize)]
pub struct TauReport {
    pub n: usize,
    #[serde(with = "rational_string")]
    pub ambient: Q,
    pub reduced: Vec<ReducedTau>,
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReducedTau {
    pub k: usize,
    #[serde(with = "rational_string")]
    pub scale: Q,
    #[serde(with = "rational_string")]
    pub tau: Q,
}

pub fn tau_report(n: usize) -> Result<TauReport> {
    if n == 0 {
        return Err(Error::Invalid("CP^0 has no lines".into()));
    }
    let ambient = ProjSpace::standard(n).tau();
    let reduced = (2..=n)
        .map(|k| {
            let sp = ProjSpace::reduced(k, n)?;
            Ok(ReducedTau { k, scale: sp.scale, tau: sp.tau() })
        })
        .collect::<Result<Vec<_>>>()?;
    let consistent = ambient == q(1, n as i64 + 1) && reduced.iter().all(|r| r.tau == ambient);
    Ok(TauReport { n, ambient, reduced, consistent })
}

// ---- moment-level descriptions ----

/// L ⊂ (source)⁻ × target cut out by moment levels on both sides and a coordinate link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentFiberCorrespondence {
    pub source: ProjSpace,
    pub target: ProjSpace,
    #[serde(with = "level_list")]
    pub source_levels: Vec<(usize, Q)>,
    #[serde(with = "level_list")]
    pub target_levels: Vec<(usize, Q)>,
    /// Pairs (s, t) with [x_s]_s = [z_t]_t projectively; starts with (0, 0) when nonempty.
    pub link: Vec<(usize, usize)>,
}

/// The Clifford torus in `space`: all |z_j|² equal.
pub fn clifford_in(space: ProjSpace) -> MomentFiberCorrespondence {
    let m = space.n;
    MomentFiberCorrespondence {
        source: ProjSpace::point(),
        target: space,
        source_levels: Vec::new(),
        target_levels: (1..=m).map(|j| (j, q(1, m as i64 + 1))).collect(),
        link: Vec::new(),
    }
}

pub fn clifford(n: usize) -> MomentFiberCorrespondence {
    clifford_in(ProjSpace::standard(n))
}

/// [1 : e^{2πiθ_1} : … : e^{2πiθ_n}] / √(n+1), a point of the Clifford torus; the inverse is
/// [`ProjectivePoint::phases`].
pub fn clifford_point(theta: &[f64]) -> ProjectivePoint {
    let r = 1.0 / ((theta.len() + 1) as f64).sqrt();
    let mut z = vec![Complex64::new(r, 0.0)];
    z.extend(theta.iter().map(|t| Complex64::from_polar(r, 2.0 * PI * t)));
    ProjectivePoint::new(z).expect("nonzero")
}

/// Σ_{(k,…,n)} ⊂ (CP^{k−1})⁻ × CP^n, 2 ≤ k ≤ n.
pub fn sigma(k: usize, n: usize) -> Result<MomentFiberCorrespondence> {
    if k < 2 || k > n {
        return Err(Error::Invalid(format!("Σ_(k,…,n) needs 2 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    Ok(MomentFiberCorrespondence {
        source: ProjSpace::reduced(k, n)?,
        target: ProjSpace::standard(n),
        source_levels: Vec::new(),
        target_levels: (k..=n).map(|j| (j, q(1, n as i64 + 1))).collect(),
        link: (0..k).map(|i| (i, i)).collect(),
    })
}

/// Σ_j ⊂ (CP^{n−1})⁻ × CP^n from the level set μ_j = π/(n+1), 1 ≤ j ≤ n.
pub fn sigma_j(j: usize, n: usize) -> Result<MomentFiberCorrespondence> {
    if j < 1 || j > n {
        return Err(Error::Invalid(format!("Σ_j needs 1 ≤ j ≤ n, got j = {j}, n = {n}")));
    }
    let others: Vec<usize> = (0..=n).filter(|&i| i != j).collect();
    Ok(MomentFiberCorrespondence {
        source: ProjSpace { n: n - 1, scale: q(n as i64, n as i64 + 1) },
        target: ProjSpace::standard(n),
        source_levels: Vec::new(),
        target_levels: vec![(j, q(1, n as i64 + 1))],
        link: others.into_iter().enumerate().collect(),
    })
}

/// L_a × L_b ⊂ (source)⁻ × target for Lagrangians given as correspondences from the point.
pub fn split_product(a: &MomentFiberCorrespondence, b: &MomentFiberCorrespondence) -> Result<MomentFiberCorrespondence> {
    if a.source.n != 0 || b.source.n != 0 {
        return Err(Error::Invalid("factors must be Lagrangians (correspondences from the point)".into()));
    }
    Ok(MomentFiberCorrespondence {
        source: a.target,
        target: b.target,
        source_levels: a.target_levels.clone(),
        target_levels: b.target_levels.clone(),
        link: Vec::new(),
    })
}

impl MomentFiberCorrespondence {
    pub fn transpose(&self) -> Self {
        MomentFiberCorrespondence {
            source: self.target,
            target: self.source,
            source_levels: self.target_levels.clone(),
            target_levels: self.source_levels.clone(),
            link: self.link.iter().map(|&(s, t)| (t, s)).collect(),
        }
    }

    /// Real dimension of the correspondence, equal to half the ambient dimension.
    pub fn dim(&self) -> usize {
        self.source.n + self.target.n
    }

    pub fn is_split(&self) -> bool {
        self.link.is_empty()
    }

    /// Source part of a split correspondence, as a Lagrangian in source⁻ seen from the point.
    pub fn split_parts(&self) -> Option<(MomentFiberCorrespondence, MomentFiberCorrespondence)> {
        if !self.is_split() {
            return None;
        }
        let a = MomentFiberCorrespondence {
            source: self.source,
            target: ProjSpace::point(),
            source_levels: self.source_levels.clone(),
            target_levels: Vec::new(),
            link: Vec::new(),
        };
        let b = MomentFiberCorrespondence {
            source: ProjSpace::point(),
            target: self.target,
            source_levels: Vec::new(),
            target_levels: self.target_levels.clone(),
            link: Vec::new(),
        };
        Some((a, b))
    }

    fn system(&self) -> ConstraintSystem {
        let mut sys = ConstraintSystem::new(vec![self.source.n, self.target.n]);
        sys.add_correspondence(0, 1, self);
        sys
    }

    /// Equivalent description with every derivable level made explicit.
    pub fn canonical(&self) -> Result<Self> {
        let mut sys = self.system();
        sys.close()?;
        let mut link = self.link.clone();
        link.sort_unstable();
        Ok(MomentFiberCorrespondence {
            source: self.source,
            target: self.target,
            source_levels: sys.level_list(0),
            target_levels: sys.level_list(1),
            link,
        })
    }

    /// Same subset of (CP^a)⁻ × CP^b.
    pub fn same_set(&self, other: &Self) -> Result<bool> {
        Ok(self.canonical()? == other.canonical()?)
    }

    /// Prescribed moment values μ_j = πq on each side, after closure.
    pub fn moment_levels(&self) -> Result<(Vec<(usize, Q)>, Vec<(usize, Q)>)> {
        let c = self.canonical()?;
        Ok((c.source_levels, c.target_levels))
    }

    pub fn contains(&self, x: &ProjectivePoint, z: &ProjectivePoint, tol: f64) -> bool {
        if x.n() != self.source.n || z.n() != self.target.n {
            return false;
        }
        let lv = |p: &ProjectivePoint, l: &[(usize, Q)]| l.iter().all(|&(j, v)| (p.z[j].norm_sqr() - qf(v)).abs() < tol);
        if !lv(x, &self.source_levels) || !lv(z, &self.target_levels) {
            return false;
        }
        if self.link.is_empty() {
            return true;
        }
        let a: Vec<Complex64> = self.link.iter().map(|&(s, _)| x.z[s]).collect();
        let b: Vec<Complex64> = self.link.iter().map(|&(_, t)| z.z[t]).collect();
        let ip: Complex64 = a.iter().zip(&b).map(|(u, v)| u.conj() * v).sum();
        let na: f64 = a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        na > 1e-12 && nb > 1e-12 && (na * nb - ip.norm()).abs() < tol
    }

    /// A random point, inside the charts x_0 ≠ 0 and z_0 ≠ 0.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<(ProjectivePoint, ProjectivePoint)> {
        let mut sys = self.system();
        sys.close()?;
        for _ in 0..1000 {
            let pts = sys.sample(rng)?;
            let (x, z) = (pts[0].clone(), pts[1].clone());
            if x.z[0].norm() > CHART_FLOOR && z.z[0].norm() > CHART_FLOOR {
                return Ok((x, z));
            }
        }
        Err(Error::Invalid("could not sample inside the standard charts".into()))
    }

    /// Jacobian of the defining equations in the real charts (x-chart, then z-chart).
    fn jacobian(&self, x: &ProjectivePoint, z: &ProjectivePoint) -> Result<Mat> {
        let (a, b) = (self.source.n, self.target.n);
        let wx = x.chart()?;
        let wz = z.chart()?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let level_grad = |w: &[Complex64], j: usize, off: usize, total: usize| -> Vec<f64> {
            let m = w.len();
            let d = 1.0 + w.iter().map(|c| c.norm_sqr()).sum::<f64>();
            let mut g = vec![0.0; total];
            let nj = if j == 0 { 1.0 } else { w[j - 1].norm_sqr() };
            for l in 0..m {
                for (part, val) in [(0, w[l].re), (1, w[l].im)] {
                    let mut v = -nj * 2.0 * val / (d * d);
                    if j >= 1 && l == j - 1 {
                        v += 2.0 * val / d;
                    }
                    g[off + part * m + l] = v;
                }
            }
            g
        };
        let total = 2 * a + 2 * b;
        for &(j, _) in &self.source_levels {
            rows.push(level_grad(&wx, j, 0, total));
        }
        for &(j, _) in &self.target_levels {
            rows.push(level_grad(&wz, j, 2 * a, total));
        }
        if let Some(&first) = self.link.first() {
            if first != (0, 0) {
                return Err(Error::Invalid("coordinate link must start with (0, 0)".into()));
            }
            for &(s, t) in &self.link[1..] {
                for part in 0..2 {
                    let mut g = vec![0.0; total];
                    g[part * a + s - 1] = 1.0;
                    g[2 * a + part * b + t - 1] = -1.0;
                    rows.push(g);
                }
            }
        }
        Ok(Mat::from_fn(rows.len(), total, |i, j| rows[i][j]))
    }

    /// Tangent space at (x, z) as a linear correspondence between the charts with their scaled
    /// Fubini–Study forms.
    pub fn tangent(&self, x: &ProjectivePoint, z: &ProjectivePoint) -> Result<LinearCorrespondence> {
        let jac = self.jacobian(x, z)?;
        let total = 2 * self.dim();
        let cols = if jac.nrows() == 0 { Mat::identity(total, total) } else { linalg::null_space(&jac, 1e-9) };
        if cols.ncols() != self.dim() {
            return Err(Error::NotTransverse(format!(
                "defining equations have rank {} at this point, expected {}",
                total - cols.ncols(),
                self.dim()
            )));
        }
        LinearCorrespondence::new(&self.source.space_at(x)?, &self.target.space_at(z)?, cols)
    }

    /// max |ω(u, v)| over an orthonormal basis of the tangent space, for the form
    /// (−ω_source) ⊕ ω_target.
    pub fn lagrangian_residual(&self, x: &ProjectivePoint, z: &ProjectivePoint) -> Result<f64> {
        let jac = self.jacobian(x, z)?;
        let total = 2 * self.dim();
        let cols = if jac.nrows() == 0 { Mat::identity(total, total) } else { linalg::null_space(&jac, 1e-9) };
        let (a, b) = (self.source.n, self.target.n);
        let mut w = Mat::zeros(total, total);
        if a > 0 {
            w.view_mut((0, 0), (2 * a, 2 * a)).copy_from(&(-self.source.form_at(x)?));
        }
        if b > 0 {
            w.view_mut((2 * a, 2 * a), (2 * b, 2 * b)).copy_from(&self.target.form_at(z)?);
        }
        Ok(linalg::max_abs(&(cols.transpose() * w * &cols)))
    }
}

// ---- constraint systems over several projective spaces ----

#[derive(Clone, Debug)]
struct Link {
    a: usize,
    b: usize,
    pairs: Vec<(usize, usize)>,
}

/// Moment levels and coordinate links on a tuple of points (p_0, …, p_r).
#[derive(Clone, Debug)]
struct ConstraintSystem {
    dims: Vec<usize>,
    levels: Vec<Vec<Option<Q>>>,
    links: Vec<Link>,
}

impl ConstraintSystem {
    fn new(dims: Vec<usize>) -> Self {
        let levels = dims.iter().map(|&m| vec![None; m + 1]).collect();
        ConstraintSystem { dims, levels, links: Vec::new() }
    }

    fn set(&mut self, space: usize, j: usize, v: Q) -> Result<bool> {
        if j > self.dims[space] {
            return Err(Error::Invalid(format!("level on coordinate z_{j} of CP^{}", self.dims[space])));
        }
        if v <= q(0, 1) || v > q(1, 1) {
            return Err(Error::Invalid(format!("moment level {v} must lie in (0, 1]")));
        }
        match self.levels[space][j] {
            Some(w) if w == v => Ok(false),
            Some(w) => Err(Error::Invalid(format!("inconsistent moment levels {w} and {v} on z_{j}"))),
            None => {
                self.levels[space][j] = Some(v);
                Ok(true)
            }
        }
    }

    fn add_correspondence(&mut self, a: usize, b: usize, c: &MomentFiberCorrespondence) {
        for &(j, v) in &c.source_levels {
            self.levels[a][j] = self.levels[a][j].or(Some(v));
        }
        for &(j, v) in &c.target_levels {
            self.levels[b][j] = self.levels[b][j].or(Some(v));
        }
        if !c.link.is_empty() {
            self.links.push(Link { a, b, pairs: c.link.clone() });
        }
    }

    fn check_added(&self, c: &MomentFiberCorrespondence, a: usize, b: usize) -> Result<()> {
        for (sp, lv) in [(a, &c.source_levels), (b, &c.target_levels)] {
            for &(j, v) in lv.iter() {
                if j > self.dims[sp] {
                    return Err(Error::Invalid(format!("level on coordinate z_{j} of CP^{}", self.dims[sp])));
                }
                if self.levels[sp][j] != Some(v) {
                    return Err(Error::Invalid(format!("inconsistent moment levels on z_{j}")));
                }
            }
        }
        Ok(())
    }

    fn known_sum(&self, space: usize, idx: impl Iterator<Item = usize>) -> Option<Q> {
        let mut s = q(0, 1);
        for j in idx {
            s += self.levels[space][j]?;
        }
        Some(s)
    }

    /// Propagates levels to a fixed point.
    fn close(&mut self) -> Result<()> {
        loop {
            let mut changed = false;
            for sp in 0..self.dims.len() {
                let unknown: Vec<usize> = (0..=self.dims[sp]).filter(|&j| self.levels[sp][j].is_none()).collect();
                let known: Q = self.levels[sp].iter().flatten().copied().sum();
                if known > q(1, 1) {
                    return Err(Error::Invalid(format!("moment levels on CP^{} exceed the simplex", self.dims[sp])));
                }
                if unknown.len() == 1 {
                    changed |= self.set(sp, unknown[0], q(1, 1) - known)?;
                } else if unknown.is_empty() && known != q(1, 1) {
                    return Err(Error::Invalid(format!("moment levels on CP^{} sum to {known}, not 1", self.dims[sp])));
                }
            }
            for li in 0..self.links.len() {
                let l = self.links[li].clone();
                for (from, to, pick_f, pick_t) in [(l.a, l.b, 0usize, 1usize), (l.b, l.a, 1, 0)] {
                    let f_idx: Vec<usize> = l.pairs.iter().map(|p| if pick_f == 0 { p.0 } else { p.1 }).collect();
                    let t_idx: Vec<usize> = l.pairs.iter().map(|p| if pick_t == 0 { p.0 } else { p.1 }).collect();
                    let Some(sf) = self.known_sum(from, f_idx.iter().copied()) else { continue };
                    let others: Vec<usize> = (0..=self.dims[to]).filter(|j| !t_idx.contains(j)).collect();
                    let total = match self.known_sum(to, t_idx.iter().copied()) {
                        Some(s) => s,
                        None => match self.known_sum(to, others.iter().copied()) {
                            Some(o) => q(1, 1) - o,
                            None => continue,
                        },
                    };
                    for (k, &j) in t_idx.iter().enumerate() {
                        let v = self.levels[from][f_idx[k]].expect("known") / sf * total;
                        changed |= self.set(to, j, v)?;
                    }
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }

    fn fully_levelled(&self) -> bool {
        self.levels.iter().all(|l| l.iter().all(Option::is_some))
    }

    fn level_list(&self, space: usize) -> Vec<(usize, Q)> {
        self.levels[space].iter().enumerate().filter_map(|(j, v)| v.map(|v| (j, v))).collect()
    }

    fn phase_offsets(&self) -> Vec<usize> {
        let mut out = vec![0];
        for &m in &self.dims {
            out.push(out.last().unwrap() + m);
        }
        out
    }

    /// Integer equations on the phases φ_{space, j}, j ≥ 1 (φ_{space, 0} = 0).
    fn phase_matrix(&self) -> IMat {
        let off = self.phase_offsets();
        let vars = *off.last().unwrap();
        let mut rows: Vec<Vec<i128>> = Vec::new();
        let var = |sp: usize, j: usize| if j == 0 { None } else { Some(off[sp] + j - 1) };
        for l in &self.links {
            let (s0, t0) = l.pairs[0];
            for &(s, t) in &l.pairs[1..] {
                let mut r = vec![0i128; vars];
                for (sp, j, c) in [(l.a, s, 1), (l.a, s0, -1), (l.b, t, -1), (l.b, t0, 1)] {
                    if let Some(v) = var(sp, j) {
                        r[v] += c;
                    }
                }
                rows.push(r);
            }
        }
        IMat::from_fn(rows.len(), vars, |i, j| rows[i][j])
    }

    fn point_from_phases(&self, sp: usize, phases: &[f64]) -> ProjectivePoint {
        let z: Vec<Complex64> = (0..=self.dims[sp])
            .map(|j| {
                let r = qf(self.levels[sp][j].expect("fully levelled")).sqrt();
                let ph = if j == 0 { 0.0 } else { phases[j - 1] };
                Complex64::from_polar(r, 2.0 * PI * ph)
            })
            .collect();
        ProjectivePoint::new(z).expect("positive levels")
    }

    /// The torus of solutions when every point is fully levelled.
    fn torus(&self) -> Result<PhaseTorus> {
        if !self.fully_levelled() {
            return Err(Error::Invalid("moment levels do not determine a torus orbit".into()));
        }
        let e = self.phase_matrix();
        let vars = e.ncols();
        let (kernel, components) = if e.nrows() == 0 {
            (IMat::identity(vars, vars), 1)
        } else {
            let s = intlin::smith(&e)?;
            let comps: i128 = s.diag[..s.rank].iter().product();
            (s.v.columns(s.rank, vars - s.rank).into_owned(), comps)
        };
        Ok(PhaseTorus { offsets: self.phase_offsets(), kernel, components })
    }

    fn points_at(&self, t: &PhaseTorus, theta: &[f64]) -> Vec<ProjectivePoint> {
        let phi = t.phases(theta);
        (0..self.dims.len()).map(|sp| self.point_from_phases(sp, &phi[t.offsets[sp]..t.offsets[sp + 1]])).collect()
    }

    /// Random solution; unlevelled points are filled in through links.
    fn sample<R: Rng>(&self, rng: &mut R) -> Result<Vec<ProjectivePoint>> {
        if self.fully_levelled() {
            let t = self.torus()?;
            let theta: Vec<f64> = (0..t.dim()).map(|_| rng.random::<f64>()).collect();
            return Ok(self.points_at(&t, &theta));
        }
        // one or two spaces: fill the side with levels and free coordinates, then follow the link
        let k = self.dims.len();
        let mut pts: Vec<Option<Vec<Complex64>>> = vec![None; k];
        let fill = |sp: usize, rng: &mut R| -> Vec<Complex64> {
            let lv = &self.levels[sp];
            let free: Vec<usize> = (0..lv.len()).filter(|&j| lv[j].is_none()).collect();
            let rest = 1.0 - lv.iter().flatten().map(|v| qf(*v)).sum::<f64>();
            let u = random_unit(free.len().max(1), rng);
            let mut z = vec![Complex64::new(0.0, 0.0); lv.len()];
            for (j, v) in lv.iter().enumerate() {
                if let Some(v) = v {
                    z[j] = Complex64::from_polar(qf(*v).sqrt(), 2.0 * PI * rng.random::<f64>());
                }
            }
            for (i, &j) in free.iter().enumerate() {
                z[j] = u[i] * rest.max(0.0).sqrt();
            }
            z
        };
        for l in &self.links {
            let covers = |sp: usize, idx: &[usize]| idx.len() == self.dims[sp] + 1;
            let sa: Vec<usize> = l.pairs.iter().map(|p| p.0).collect();
            let tb: Vec<usize> = l.pairs.iter().map(|p| p.1).collect();
            let (from, to, fi, ti) = if covers(l.a, &sa) { (l.b, l.a, tb, sa) } else { (l.a, l.b, sa, tb) };
            let zf = pts[from].take().unwrap_or_else(|| fill(from, rng));
            let mut zt = pts[to].take().unwrap_or_else(|| fill(to, rng));
            let sub: Vec<Complex64> = fi.iter().map(|&j| zf[j]).collect();
            let ns = sub.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let others: f64 = (0..zt.len()).filter(|j| !ti.contains(j)).map(|j| zt[j].norm_sqr()).sum();
            let w = (1.0 - others).max(0.0).sqrt();
            for (i, &j) in ti.iter().enumerate() {
                zt[j] = sub[i] / ns * w;
            }
            pts[from] = Some(zf);
            pts[to] = Some(zt);
        }
        pts.into_iter()
            .enumerate()
            .map(|(sp, p)| ProjectivePoint::new(p.unwrap_or_else(|| fill(sp, rng))))
            .collect()
    }
}

/// Connected solution torus φ = Kθ of the phase equations.
#[derive(Clone, Debug)]
struct PhaseTorus {
    offsets: Vec<usize>,
    kernel: IMat,
    components: i128,
}

impl PhaseTorus {
    fn dim(&self) -> usize {
        self.kernel.ncols()
    }

    fn phases(&self, theta: &[f64]) -> Vec<f64> {
        let k = intlin::to_f64(&self.kernel);
        (0..k.nrows()).map(|r| (0..k.ncols()).map(|c| k[(r, c)] * theta[c]).sum::<f64>().rem_euclid(1.0)).collect()
    }

    fn block(&self, spaces: &[usize]) -> IMat {
        let rows: Vec<usize> = spaces.iter().flat_map(|&sp| self.offsets[sp]..self.offsets[sp + 1]).collect();
        IMat::from_fn(rows.len(), self.kernel.ncols(), |i, j| self.kernel[(rows[i], j)])
    }
}

// ---- composition ----

/// Verdict of [`compose_toric`].
#[derive(Clone, Debug, Serialize)]
pub struct ToricComposition {
    pub composed: MomentFiberCorrespondence,
    /// Dimension of the fiber product, a torus orbit.
    pub fiber_dim: usize,
    pub samples: usize,
    /// Smallest singular value of the fiber-product constraint over the samples.
    pub min_margin: f64,
    pub max_lagrangian_residual: f64,
    pub transverse: bool,
    pub injective: bool,
    pub embedded: bool,
    pub witness: Option<String>,
}

fn format_points(p: &[ProjectivePoint]) -> String {
    p.iter()
        .map(|x| format!("[{}]", x.z.iter().map(|c| format!("{:.6}{:+.6}i", c.re, c.im)).collect::<Vec<_>>().join(" : ")))
        .collect::<Vec<_>>()
        .join(", ")
}

/// L_a ∘ L_b for moment-level correspondences whose fiber product is a torus orbit:
/// identifies the composition, checks transversality of the fiber product at `samples`
/// random points through tangent frames, and injectivity of the projection on the phase
/// torus.
pub fn compose_toric(a: &MomentFiberCorrespondence, b: &MomentFiberCorrespondence, samples: usize, seed: u64) -> Result<ToricComposition> {
    if a.target != b.source {
        return Err(Error::SpaceMismatch(format!("CP^{} (scale {}) vs CP^{} (scale {})", a.target.n, a.target.scale, b.source.n, b.source.scale)));
    }
    let mut sys = ConstraintSystem::new(vec![a.source.n, a.target.n, b.target.n]);
    sys.add_correspondence(0, 1, a);
    for &(j, v) in &b.source_levels {
        sys.set(1, j, v)?;
    }
    for &(j, v) in &b.target_levels {
        sys.set(2, j, v)?;
    }
    if !b.link.is_empty() {
        sys.links.push(Link { a: 1, b: 2, pairs: b.link.clone() });
    }
    sys.close()?;
    sys.check_added(a, 0, 1)?;
    let torus = sys.torus()?;
    if torus.components != 1 {
        return Err(Error::NotEmbedded(format!("fiber product has {} components", torus.components)));
    }
    let fiber_dim = torus.dim();

    // composite description: levels on the outer points, link through shared middle coordinates
    let mut link = Vec::new();
    for &(s, t) in &a.link {
        if let Some(&(_, u)) = b.link.iter().find(|p| p.0 == t) {
            link.push((s, u));
        }
    }
    link.sort_unstable();
    if link.len() < 2 {
        link.clear();
    }
    let composed = MomentFiberCorrespondence {
        source: a.source,
        target: b.target,
        source_levels: sys.level_list(0),
        target_levels: sys.level_list(2),
        link,
    };

    // injectivity of (x, y, z) ↦ (x, z) on the phase torus
    let proj = torus.block(&[0, 2]);
    let ps = intlin::smith(&proj)?;
    let mut witness = None;
    let injective = if ps.rank < fiber_dim {
        witness = Some(format!("projection of the fiber product has rank {} < {fiber_dim}", ps.rank));
        false
    } else if let Some(i) = ps.diag[..fiber_dim].iter().position(|&d| d != 1) {
        let d = ps.diag[i];
        let t0 = vec![0.0; fiber_dim];
        let t1: Vec<f64> = (0..fiber_dim).map(|r| ps.v[(r, i)] as f64 / d as f64).collect();
        witness = Some(format!(
            "fiber points {} and {} have the same projection",
            format_points(&sys.points_at(&torus, &t0)),
            format_points(&sys.points_at(&torus, &t1))
        ));
        false
    } else {
        true
    };

    let mut rng = symplinalg::rng_from_seed(seed);
    let mut min_margin = f64::INFINITY;
    let mut max_res = 0.0f64;
    let mut transverse = fiber_dim == composed.dim();
    if !transverse && witness.is_none() {
        witness = Some(format!("fiber product has dimension {fiber_dim}, expected {}", composed.dim()));
    }
    let mut done = 0;
    let mut tries = 0;
    while done < samples && transverse {
        tries += 1;
        if tries > 100 * samples.max(1) {
            return Err(Error::Invalid("could not sample the fiber product inside the charts".into()));
        }
        let theta: Vec<f64> = (0..fiber_dim).map(|_| rng.random::<f64>()).collect();
        let p = sys.points_at(&torus, &theta);
        if p.iter().any(|x| x.z[0].norm() < CHART_FLOOR) {
            continue;
        }
        done += 1;
        if !a.contains(&p[0], &p[1], 1e-9) || !b.contains(&p[1], &p[2], 1e-9) || !composed.contains(&p[0], &p[2], 1e-9) {
            return Err(Error::Invalid(format!("sampled fiber point {} violates the descriptions", format_points(&p))));
        }
        max_res = max_res.max(a.lagrangian_residual(&p[0], &p[1])?).max(b.lagrangian_residual(&p[1], &p[2])?);
        let rep = corrlin::compose(&a.tangent(&p[0], &p[1])?, &b.tangent(&p[1], &p[2])?)?;
        min_margin = min_margin.min(rep.margin);
        if !rep.transverse || rep.kernel.dim() > 0 {
            transverse = false;
            witness = Some(format!(
                "fiber point {} is not transverse (margin {:.3e}, kernel dimension {})",
                format_points(&p),
                rep.margin,
                rep.kernel.dim()
            ));
        }
    }
    let embedded = transverse && injective;
    Ok(ToricComposition {
        composed,
        fiber_dim,
        samples: done,
        min_margin,
        max_lagrangian_residual: max_res,
        transverse,
        injective,
        embedded,
        witness,
    })
}

// ---- Morse functions and generators ----

/// a·cos(2π(kθ + φ)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosTerm {
    pub amplitude: f64,
    pub frequency: u32,
    pub phase: f64,
}

/// Separable function f(θ) = Σ_i g_i(θ_i) on a torus, each g_i a sum of cosine terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseFunction {
    pub terms: Vec<Vec<CosTerm>>,
}

impl MorseFunction {
    /// Σ cos(2πθ_i).
    pub fn standard(d: usize) -> Self {
        MorseFunction { terms: vec![vec![CosTerm { amplitude: 1.0, frequency: 1, phase: 0.0 }]; d] }
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    fn d1(terms: &[CosTerm], t: f64) -> f64 {
        terms.iter().map(|c| -c.amplitude * 2.0 * PI * c.frequency as f64 * (2.0 * PI * (c.frequency as f64 * t + c.phase)).sin()).sum()
    }

    fn d2(terms: &[CosTerm], t: f64) -> f64 {
        terms
            .iter()
            .map(|c| {
                let w = 2.0 * PI * c.frequency as f64;
                -c.amplitude * w * w * (2.0 * PI * (c.frequency as f64 * t + c.phase)).cos()
            })
            .sum()
    }

    /// Critical points of one coordinate function with their second derivatives.
    fn critical_1d(terms: &[CosTerm]) -> Result<Vec<(f64, f64)>> {
        let kmax = terms.iter().map(|c| c.frequency).max().unwrap_or(0);
        if terms.iter().all(|c| c.amplitude == 0.0 || c.frequency == 0) {
            return Err(Error::NotTransverse("degenerate critical point: the function is constant along a circle".into()));
        }
        let grid = 512 * kmax as usize;
        let at = |i: usize| (i as f64 + 0.5) / grid as f64;
        let mut out = Vec::new();
        for i in 0..grid {
            let (mut lo, mut hi) = (at(i), at(i) + 1.0 / grid as f64);
            let (flo, fhi) = (Self::d1(terms, lo), Self::d1(terms, hi));
            if flo == 0.0 {
                out.push(lo);
                continue;
            }
            if flo.signum() == fhi.signum() {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if Self::d1(terms, mid).signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out.iter()
            .map(|&t| {
                let t = t.rem_euclid(1.0);
                let t = if t > 1.0 - 1e-13 { 0.0 } else { t };
                let h = Self::d2(terms, t);
                if h.abs() < 1e-8 {
                    return Err(Error::NotTransverse(format!("degenerate critical point at θ = {t:.12}")));
                }
                Ok((t, h))
            })
            .collect()
    }

    /// All critical points with their Morse indices.
    pub fn critical_points(&self) -> Result<Vec<(Vec<f64>, usize)>> {
        let per: Vec<Vec<(f64, f64)>> = self.terms.iter().map(|t| Self::critical_1d(t)).collect::<Result<_>>()?;
        let mut out = vec![(Vec::new(), 0usize)];
        for c in &per {
            let mut next = Vec::with_capacity(out.len() * c.len());
            for (pt, idx) in &out {
                for &(t, h) in c {
                    let mut p = pt.clone();
                    p.push(t);
                    next.push((p, idx + usize::from(h < 0.0)));
                }
            }
            out = next;
        }
        Ok(out)
    }
}

/// A generator: the tuple of points, torus coordinates, Morse index and Z_2 degree.
#[derive(Clone, Debug, Serialize)]
pub struct ToricGenerator {
    pub points: Vec<ProjectivePoint>,
    pub angles: Vec<f64>,
    pub index: usize,
    pub degree: i64,
}

/// Cyclic sequence CP^{m_0} → CP^{m_1} → … → CP^{m_0} of moment-level correspondences.
#[derive(Clone, Debug, PartialEq)]
pub struct ToricSequence {
    spaces: Vec<ProjSpace>,
    correspondences: Vec<MomentFiberCorrespondence>,
    tau: Option<Q>,
}

impl ToricSequence {
    pub fn new(spaces: Vec<ProjSpace>, correspondences: Vec<MomentFiberCorrespondence>, tau: Option<Q>) -> Result<Self> {
        let len = spaces.len();
        if len == 0 || correspondences.len() != len {
            return Err(Error::Invalid("one correspondence per manifold is needed".into()));
        }
        for (j, c) in correspondences.iter().enumerate() {
            if c.source != spaces[j] || c.target != spaces[(j + 1) % len] {
                return Err(Error::SpaceMismatch(format!("correspondence {j} does not run from M_{j} to M_{}", (j + 1) % len)));
            }
        }
        if let Some(t) = tau {
            if let Some(s) = spaces.iter().find(|s| s.n > 0 && s.tau() != t) {
                return Err(Error::Invalid(format!("CP^{} has monotonicity constant {}π, declared {t}π", s.n, s.tau())));
            }
        }
        Ok(ToricSequence { spaces, correspondences, tau })
    }

    pub fn spaces(&self) -> &[ProjSpace] {
        &self.spaces
    }

    pub fn correspondences(&self) -> &[MomentFiberCorrespondence] {
        &self.correspondences
    }

    pub fn tau(&self) -> Option<Q> {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    fn system(&self) -> Result<ConstraintSystem> {
        let len = self.len();
        let mut sys = ConstraintSystem::new(self.spaces.iter().map(|s| s.n).collect());
        for (j, c) in self.correspondences.iter().enumerate() {
            for &(i, v) in &c.source_levels {
                sys.set(j, i, v)?;
            }
            for &(i, v) in &c.target_levels {
                sys.set((j + 1) % len, i, v)?;
            }
            if !c.link.is_empty() {
                sys.links.push(Link { a: j, b: (j + 1) % len, pairs: c.link.clone() });
            }
        }
        sys.close()?;
        Ok(sys)
    }

    /// Dimension of the clean generalized intersection, a torus orbit.
    pub fn clean_dim(&self) -> Result<usize> {
        Ok(self.system()?.torus()?.dim())
    }

    /// Generators after perturbing by a Morse function on the clean intersection torus;
    /// `None` uses Σ cos(2πθ_i).
    pub fn generators(&self, morse: Option<&MorseFunction>) -> Result<Vec<ToricGenerator>> {
        let sys = self.system()?;
        let torus = sys.torus()?;
        if torus.components != 1 {
            return Err(Error::Invalid(format!("clean intersection has {} components", torus.components)));
        }
        let d = torus.dim();
        let standard = MorseFunction::standard(d);
        let f = morse.unwrap_or(&standard);
        if f.dim() != d {
            return Err(Error::DimensionMismatch(format!("Morse function on T^{}, clean intersection is T^{d}", f.dim())));
        }
        let len = self.len();
        let mut out = Vec::new();
        for (theta, index) in f.critical_points()? {
            let points = sys.points_at(&torus, &theta);
            for j in 0..len {
                if !self.correspondences[j].contains(&points[j], &points[(j + 1) % len], 1e-9) {
                    return Err(Error::Invalid(format!("generator {} fails correspondence {j}", format_points(&points))));
                }
            }
            out.push(ToricGenerator { points, angles: theta, index, degree: (index as i64).rem_euclid(TORIC_MODULUS) });
        }
        Ok(out)
    }

    /// Replaces correspondences j−1, j by their composition.
    pub fn compose_at(&self, j: usize, samples: usize, seed: u64) -> Result<(ToricSequence, ToricComposition)> {
        let len = self.len();
        if len < 2 || j == 0 || j >= len {
            return Err(Error::Invalid(format!("composition position {j} must lie in 1..{len}")));
        }
        let c = compose_toric(&self.correspondences[j - 1], &self.correspondences[j], samples, seed)?;
        if !c.embedded {
            return Err(Error::NotEmbedded(c.witness.clone().unwrap_or_default()));
        }
        let mut spaces = self.spaces.clone();
        spaces.remove(j);
        let mut cs = self.correspondences.clone();
        cs.splice(j - 1..=j, [c.composed.clone()]);
        Ok((ToricSequence::new(spaces, cs, self.tau)?, c))
    }

    /// Splits at a product correspondence L_j × L_{j+1} when M_0 is the point.
    pub fn kunneth_split(&self, j: usize) -> Result<(ToricSequence, ToricSequence)> {
        if self.spaces[0].n != 0 {
            return Err(Error::Invalid("Künneth splitting needs M_0 = pt".into()));
        }
        let (a, b) = self
            .correspondences
            .get(j)
            .and_then(MomentFiberCorrespondence::split_parts)
            .ok_or_else(|| Error::Invalid(format!("correspondence {j} is not split")))?;
        let mut ls = self.spaces[..=j].to_vec();
        let mut lc = self.correspondences[..j].to_vec();
        lc.push(a);
        if ls.is_empty() {
            ls.push(ProjSpace::point());
        }
        let mut rs = vec![ProjSpace::point()];
        rs.extend_from_slice(&self.spaces[j + 1..]);
        let mut rc = vec![b];
        rc.extend_from_slice(&self.correspondences[j + 1..]);
        Ok((ToricSequence::new(ls, lc, self.tau)?, ToricSequence::new(rs, rc, self.tau)?))
    }
}

fn same_tuple(a: &[ProjectivePoint], b: &[ProjectivePoint]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.distance(y) < 1e-7)
}

/// Index map from `from` to `to` through `f`; fails unless bijective.
pub fn generator_bijection<F: Fn(&[ProjectivePoint]) -> Vec<ProjectivePoint>>(
    from: &[ToricGenerator],
    to: &[ToricGenerator],
    f: F,
) -> Result<Vec<usize>> {
    if from.len() != to.len() {
        return Err(Error::Invalid(format!("generator counts differ: {} vs {}", from.len(), to.len())));
    }
    let mut hit = vec![false; to.len()];
    from.iter()
        .map(|g| {
            let img = f(&g.points);
            let i = to
                .iter()
                .position(|h| same_tuple(&h.points, &img))
                .ok_or_else(|| Error::Invalid(format!("image {} is not a generator", format_points(&img))))?;
            if std::mem::replace(&mut hit[i], true) {
                return Err(Error::Invalid("generator map is not injective".into()));
            }
            Ok(i)
        })
        .collect()
}

/// Generators of the perturbed Clifford pair (T^n_Cl, T^n_Cl).
pub fn perturbed_generators(n: usize, morse: Option<&MorseFunction>) -> Result<Vec<ToricGenerator>> {
    let t = clifford(n);
    let seq = ToricSequence::new(vec![ProjSpace::point(), t.target], vec![t.clone(), t.transpose()], Some(ProjSpace::standard(n).tau()))?;
    seq.generators(morse)
}

/// Z_2-graded complex on toric generators with vanishing differential.
pub fn zero_complex(gens: &[ToricGenerator]) -> Result<GradedChainComplex> {
    GradedChainComplex::zero(gens.iter().map(|g| g.degree).collect(), TORIC_MODULUS)
}

// ---- the chain of reductions for the Clifford torus ----

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorRow {
    pub points: Vec<Vec<[f64; 2]>>,
    pub angles: Vec<f64>,
    pub degree: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CalcStep {
    pub name: String,
    pub spaces: Vec<ProjSpace>,
    pub count: usize,
    /// Number of generators in degree 0 and 1.
    pub degree_counts: Vec<usize>,
    pub generators: Vec<GeneratorRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionCheck {
    pub name: String,
    pub embedded: bool,
    pub identified: bool,
    pub samples: usize,
    pub min_margin: f64,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CalcReport {
    pub n: usize,
    pub steps: Vec<CalcStep>,
    pub compositions: Vec<CompositionCheck>,
    /// Generator bijections between consecutive lines.
    pub bijections: Vec<String>,
    pub tensor_factors: (usize, usize),
    pub consistent: bool,
}

fn rows(gens: &[ToricGenerator]) -> Vec<GeneratorRow> {
    gens.iter()
        .map(|g| GeneratorRow {
            points: g.points.iter().map(|p| p.z.iter().map(|c| [c.re, c.im]).collect()).collect(),
            angles: g.angles.clone(),
            degree: g.degree,
        })
        .collect()
}

fn step(name: &str, seq: &ToricSequence) -> Result<(CalcStep, Vec<ToricGenerator>)> {
    let gens = seq.generators(None)?;
    let mut degree_counts = vec![0; TORIC_MODULUS as usize];
    for g in &gens {
        degree_counts[g.degree as usize] += 1;
    }
    Ok((
        CalcStep { name: name.into(), spaces: seq.spaces.clone(), count: gens.len(), degree_counts, generators: rows(&gens) },
        gens,
    ))
}

/// The chain HF(T^n, T^n) = HF(T^1∘Σ_(2..n), Σ_1ᵗ∘T^{n−1}) ≅ HF(T^1, Σ_(2..n), Σ_1ᵗ, T^{n−1})
/// ≅ HF(T^1, Σ_(2..n)∘Σ_1ᵗ, T^{n−1}) ≅ HF(T^1, T^1 × T^{n−1}, T^{n−1}) ≅ HF(T^1,T^1) ⊗ HF(T^{n−1},T^{n−1})
/// at the level of generators.
pub fn calc_chain(n: usize, samples: usize, seed: u64) -> Result<CalcReport> {
    if n < 2 {
        return Err(Error::Invalid(format!("the chain needs n ≥ 2, got {n}")));
    }
    let tau = Some(ProjSpace::standard(n).tau());
    let s = sigma(2, n)?;
    let s1 = sigma_j(1, n)?;
    let t1 = clifford_in(s.source);
    let tn1 = clifford_in(s1.source);
    let tn = clifford(n);
    let pt = ProjSpace::point();

    let quilt = ToricSequence::new(vec![pt, s.source, s.target, s1.source], vec![t1.clone(), s.clone(), s1.transpose(), tn1.transpose()], tau)?;
    let mut compositions = Vec::new();
    let mut bijections = Vec::new();
    let mut record = |name: &str, c: &ToricComposition, expect: &MomentFiberCorrespondence| -> Result<bool> {
        let identified = c.composed.same_set(expect)?;
        compositions.push(CompositionCheck {
            name: name.into(),
            embedded: c.embedded,
            identified,
            samples: c.samples,
            min_margin: c.min_margin,
            witness: c.witness.clone(),
        });
        Ok(c.embedded && identified)
    };
    let mut ok = true;

    // line 2 → line 1: compose both ends
    let (half, c1) = quilt.compose_at(1, samples, seed)?;
    ok &= record("T^1 ∘ Σ_(2..n) = T^n", &c1, &tn)?;
    let (line1, c2) = half.compose_at(2, samples, seed.wrapping_add(1))?;
    ok &= record("Σ_1ᵗ ∘ T^{n-1} = T^n", &c2, &tn.transpose())?;
    let direct = ToricSequence::new(vec![pt, tn.target], vec![tn.clone(), tn.transpose()], tau)?;
    ok &= line1.correspondences().iter().zip(direct.correspondences()).all(|(a, b)| a.same_set(b).unwrap_or(false));

    // line 2 → line 3
    let (line3, c3) = quilt.compose_at(2, samples, seed.wrapping_add(2))?;
    let product = split_product(&t1, &tn1)?;
    ok &= record("Σ_(2..n) ∘ Σ_1ᵗ = T^1 × T^{n-1}", &c3, &product)?;
    let line4 = ToricSequence::new(vec![pt, s.source, s1.source], vec![t1.clone(), product, tn1.transpose()], tau)?;
    ok &= line3.correspondences().iter().zip(line4.correspondences()).all(|(a, b)| a.same_set(b).unwrap_or(false));
    let (left, right) = line4.kunneth_split(1)?;

    let (s1r, g1) = step("HF(T^n, T^n)", &direct)?;
    let (s2r, g2) = step("HF(T^1, Σ_(2..n), Σ_1ᵗ, T^{n-1})", &quilt)?;
    let (s3r, g3) = step("HF(T^1, Σ_(2..n) ∘ Σ_1ᵗ, T^{n-1})", &line3)?;
    let (s4r, g4) = step("HF(T^1, T^1 × T^{n-1}, T^{n-1})", &line4)?;
    let (sl, gl) = step("HF(T^1, T^1)", &left)?;
    let (sr, gr) = step("HF(T^{n-1}, T^{n-1})", &right)?;

    // bijections: drop the middle points
    let drop = |idx: Vec<usize>| move |p: &[ProjectivePoint]| -> Vec<ProjectivePoint> {
        p.iter().enumerate().filter(|(i, _)| !idx.contains(i)).map(|(_, x)| x.clone()).collect()
    };
    let mut check = |name: &str, r: Result<Vec<usize>>| {
        match r {
            Ok(_) => bijections.push(format!("{name}: ok")),
            Err(e) => {
                ok = false;
                bijections.push(format!("{name}: {e}"));
            }
        }
    };
    check("line 2 → line 1", generator_bijection(&g2, &g1, drop(vec![1, 3])));
    check("line 2 → line 3", generator_bijection(&g2, &g3, drop(vec![2])));
    check("line 3 → line 4", generator_bijection(&g3, &g4, |p: &[ProjectivePoint]| p.to_vec()));

    // Künneth: generators of line 4 are pairs
    let mut pairs = 0;
    for g in &g4 {
        let l = gl.iter().position(|h| same_tuple(&h.points, &g.points[..=1]));
        let r = gr.iter().position(|h| same_tuple(&h.points[1..], &g.points[2..]));
        match (l, r) {
            (Some(a), Some(b)) if (gl[a].degree + gr[b].degree).rem_euclid(TORIC_MODULUS) == g.degree => pairs += 1,
            _ => ok = false,
        }
    }
    ok &= pairs == gl.len() * gr.len() && pairs == g4.len();
    let sorted = |g: &[ToricGenerator]| {
        let mut d: Vec<i64> = g.iter().map(|x| x.degree).collect();
        d.sort_unstable();
        d
    };
    let base = sorted(&g1);
    ok &= [&g2, &g3, &g4].iter().all(|g| sorted(g) == base);
    ok &= g1.len() == 1 << n;

    Ok(CalcReport {
        n,
        steps: vec![s1r, s2r, s3r, s4r, sl, sr],
        compositions,
        bijections,
        tensor_factors: (gl.len(), gr.len()),
        consistent: ok,
    })
}

/// The sequence (T^{k−1}_Cl, Σ_(k..n), T^n_Cl) from pt through CP^{k−1} and CP^n, and its
/// composed form (T^n_Cl, T^n_Cl).
pub fn sphere_sequences(k: usize, n: usize) -> Result<(ToricSequence, ToricSequence)> {
    let s = sigma(k, n)?;
    let tk = clifford_in(s.source);
    let tn = clifford(n);
    let tau = Some(ProjSpace::standard(n).tau());
    let pt = ProjSpace::point();
    let quilt = ToricSequence::new(vec![pt, s.source, s.target], vec![tk, s, tn.transpose()], tau)?;
    let pair = ToricSequence::new(vec![pt, tn.target], vec![tn.clone(), tn.transpose()], tau)?;
    Ok((quilt, pair))
}

// ---- JSON ----

mod rational_string {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

mod level_list {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[(usize, Q)], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<(usize, String)> = v.iter().map(|(j, q)| (*j, q.to_string())).collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(usize, Q)>, D::Error> {
        let raw: Vec<(usize, String)> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|(j, s)| super::parse_rational(&s).map(|q| (j, q)).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// "p/q" or an integer.
pub fn parse_rational(s: &str) -> std::result::Result<Q, String> {
    let s = s.trim();
    let (a, b) = s.split_once('/').unwrap_or((s, "1"));
    let a: i64 = a.trim().parse().map_err(|_| format!("bad rational {s:?}"))?;
    let b: i64 = b.trim().parse().map_err(|_| format!("bad rational {s:?}"))?;
    if b == 0 {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Q::new(a, b))
}

/// {"provider": "cpn", "manifolds": [{"n", "scale"}], "correspondences": [...], "tau"}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToricSequenceJson {
    pub provider: String,
    pub manifolds: Vec<ProjSpace>,
    pub correspondences: Vec<MomentFiberCorrespondence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morse: Option<MorseFunction>,
}

impl ToricSequenceJson {
    pub fn from_sequence(seq: &ToricSequence) -> Self {
        ToricSequenceJson {
            provider: "cpn".into(),
            manifolds: seq.spaces.clone(),
            correspondences: seq.correspondences.clone(),
            tau: seq.tau.map(|t| t.to_string()),
            morse: None,
        }
    }

    pub fn to_sequence(&self) -> Result<ToricSequence> {
        if self.provider != "cpn" {
            return Err(Error::Invalid(format!("/provider: expected \"cpn\", found \"{}\"", self.provider)));
        }
        let tau = match &self.tau {
            Some(t) => Some(parse_rational(t).map_err(|e| Error::Invalid(format!("/tau: {e}")))?),
            None => None,
        };
        for (j, c) in self.correspondences.iter().enumerate() {
            let mut sys = c.system();
            sys.close().map_err(|e| Error::Invalid(format!("/correspondences/{j}: {e}")))?;
        }
        ToricSequence::new(self.manifolds.clone(), self.correspondences.clone(), tau).map_err(|e| Error::Invalid(format!("/correspondences: {e}")))
    }
}
