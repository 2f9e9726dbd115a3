//! Linear symplectic algebra: spaces, subspaces, isotropy classes, complements.
//!
//! Coordinates on R^{2n} are ordered (x_1..x_n, y_1..y_n) and the standard form is
//! ω((x,y),(x',y')) = x·y' − y·x'. Spaces built by `dual`/`product` or from an explicit
//! form matrix keep their native coordinates together with a linear symplectomorphism
//! `to_std` onto the standard space.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, CMat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Tolerance for the Lagrangian invariant on unit-normalized frames.
pub const LAG_TOL: f64 = 1e-9;

pub fn standard_form(n: usize) -> Mat {
    let mut m = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = 1.0;
        m[(n + i, i)] = -1.0;
    }
    m
}

/// Multiplication by i on C^n ≅ R^{2n}; compatible with the standard form.
pub fn standard_j(n: usize) -> Mat {
    let mut m = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = -1.0;
        m[(n + i, i)] = 1.0;
    }
    m
}

/// exp(tJ) = cos t + J sin t.
pub fn rotation(n: usize, t: f64) -> Mat {
    Mat::identity(2 * n, 2 * n) * t.cos() + standard_j(n) * t.sin()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticSpace {
    n: usize,
    form: Mat,
    to_std: Mat,
    from_std: Mat,
    orthogonal: bool,
}

impl SymplecticSpace {
    pub fn standard(n: usize) -> Self {
        SymplecticSpace {
            n,
            form: standard_form(n),
            to_std: Mat::identity(2 * n, 2 * n),
            from_std: Mat::identity(2 * n, 2 * n),
            orthogonal: true,
        }
    }

    pub fn point() -> Self {
        Self::standard(0)
    }

    /// Accept an arbitrary nondegenerate antisymmetric matrix; a Darboux basis is
    /// computed by symplectic Gram–Schmidt.
    pub fn from_form(form: Mat) -> Result<Self> {
        let d = form.nrows();
        if form.ncols() != d || d % 2 != 0 {
            return Err(Error::BadForm(format!("shape {}x{}", d, form.ncols())));
        }
        let scale = linalg::max_abs(&form).max(1.0);
        let asym = linalg::max_abs(&(&form + form.transpose()));
        if asym > 1e-12 * scale {
            return Err(Error::BadForm(format!("not antisymmetric (residual {asym:.3e})")));
        }
        let n = d / 2;
        if d > 0 && linalg::sigma_min(&form) < 1e-12 * scale {
            return Err(Error::BadForm("degenerate".into()));
        }
        if form == standard_form(n) {
            return Ok(Self::standard(n));
        }
        let pair = |u: &nalgebra::DVector<f64>, v: &nalgebra::DVector<f64>| (u.transpose() * &form * v)[(0, 0)];
        let mut pool: Vec<nalgebra::DVector<f64>> =
            (0..d).map(|i| nalgebra::DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
        let mut es = Vec::with_capacity(n);
        let mut fs = Vec::with_capacity(n);
        for _ in 0..n {
            let mut best = (0, 0, 0.0f64);
            for a in 0..pool.len() {
                for b in 0..pool.len() {
                    let w = pair(&pool[a], &pool[b]).abs();
                    if w > best.2 {
                        best = (a, b, w);
                    }
                }
            }
            if best.2 < 1e-12 * scale {
                return Err(Error::BadForm("degenerate during Darboux reduction".into()));
            }
            let e = pool[best.0].clone();
            let mut f = pool[best.1].clone();
            let w = pair(&e, &f);
            f /= w;
            let (ia, ib) = (best.0.max(best.1), best.0.min(best.1));
            pool.remove(ia);
            pool.remove(ib);
            for w in pool.iter_mut() {
                let a = pair(w, &f);
                let b = pair(w, &e);
                *w = &*w - &e * a + &f * b;
            }
            es.push(e);
            fs.push(f);
        }
        let mut b = Mat::zeros(d, d);
        for i in 0..n {
            b.set_column(i, &es[i]);
            b.set_column(n + i, &fs[i]);
        }
        let to_std = b.clone().try_inverse().ok_or_else(|| Error::BadForm("singular Darboux basis".into()))?;
        Ok(SymplecticSpace { n, form, to_std, from_std: b, orthogonal: false })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn form(&self) -> &Mat {
        &self.form
    }

    /// Linear symplectomorphism from native to standard coordinates.
    pub fn to_std(&self) -> &Mat {
        &self.to_std
    }

    pub fn from_std(&self) -> &Mat {
        &self.from_std
    }

    pub fn is_standard(&self) -> bool {
        self.form == standard_form(self.n)
    }

    pub fn dual(&self) -> Self {
        let n = self.n;
        let mut c = Mat::identity(2 * n, 2 * n);
        for i in n..2 * n {
            c[(i, i)] = -1.0;
        }
        SymplecticSpace {
            n,
            form: -&self.form,
            to_std: &c * &self.to_std,
            from_std: &self.from_std * &c,
            orthogonal: self.orthogonal,
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        let (a, b) = (self.n, other.n);
        let n = a + b;
        // permutation (x_a, y_a, x_b, y_b) -> (x_a, x_b, y_a, y_b)
        let mut p = Mat::zeros(2 * n, 2 * n);
        for i in 0..a {
            p[(i, i)] = 1.0;
            p[(n + i, a + i)] = 1.0;
        }
        for i in 0..b {
            p[(a + i, 2 * a + i)] = 1.0;
            p[(n + a + i, 2 * a + b + i)] = 1.0;
        }
        let to_std = &p * linalg::block_diag(&self.to_std, &other.to_std);
        let from_std = linalg::block_diag(&self.from_std, &other.from_std) * p.transpose();
        SymplecticSpace {
            n,
            form: linalg::block_diag(&self.form, &other.form),
            to_std,
            from_std,
            orthogonal: self.orthogonal && other.orthogonal,
        }
    }

    pub fn omega(&self, u: &Mat, v: &Mat) -> Mat {
        u.transpose() * &self.form * v
    }

    /// Compatible complex structure transported to native coordinates.
    pub fn complex_structure(&self) -> Mat {
        &self.from_std * standard_j(self.n) * &self.to_std
    }

    /// Orthonormal frame in standard coordinates spanning the image of `f`.
    pub fn std_frame(&self, f: &Mat) -> Mat {
        let g = &self.to_std * f;
        if self.orthogonal {
            g
        } else {
            linalg::reorthonormalize(&g)
        }
    }

    pub fn native_frame(&self, g: &Mat) -> Mat {
        let f = &self.from_std * g;
        if self.orthogonal {
            f
        } else {
            linalg::reorthonormalize(&f)
        }
    }
}

pub fn standard_space(n: usize) -> SymplecticSpace {
    SymplecticSpace::standard(n)
}

pub fn dual(sp: &SymplecticSpace) -> SymplecticSpace {
    sp.dual()
}

pub fn product(a: &SymplecticSpace, b: &SymplecticSpace) -> SymplecticSpace {
    a.product(b)
}

/// Linear subspace with an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient: SymplecticSpace,
    basis: Mat,
}

impl Subspace {
    pub fn new(ambient: &SymplecticSpace, basis: Mat) -> Result<Self> {
        if basis.nrows() != ambient.dim() {
            return Err(Error::DimensionMismatch(format!(
                "basis has {} rows, ambient dimension {}",
                basis.nrows(),
                ambient.dim()
            )));
        }
        let scale = linalg::max_abs(&basis).max(1e-300);
        let q = linalg::orth(&(&basis / scale), 1e-10);
        if q.ncols() != basis.ncols() {
            return Err(Error::RankDeficient { rank: q.ncols(), expected: basis.ncols() });
        }
        Ok(Subspace { ambient: ambient.clone(), basis: q })
    }

    /// Span of possibly dependent columns.
    pub fn span(ambient: &SymplecticSpace, vectors: &Mat) -> Self {
        Subspace { ambient: ambient.clone(), basis: linalg::orth(vectors, 1e-9) }
    }

    pub fn zero(ambient: &SymplecticSpace) -> Self {
        Subspace { ambient: ambient.clone(), basis: Mat::zeros(ambient.dim(), 0) }
    }

    pub fn whole(ambient: &SymplecticSpace) -> Self {
        Subspace { ambient: ambient.clone(), basis: Mat::identity(ambient.dim(), ambient.dim()) }
    }

    pub fn ambient(&self) -> &SymplecticSpace {
        &self.ambient
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn contains(&self, v: &Mat, tol: f64) -> bool {
        let r = v - &self.basis * (self.basis.transpose() * v);
        linalg::max_abs(&r) <= tol * linalg::max_abs(v).max(1.0)
    }

    pub fn is_isotropic(&self) -> bool {
        let g = self.ambient.omega(&self.basis, &self.basis);
        linalg::max_abs(&g) < 1e-9 * form_scale(&self.ambient)
    }

    pub fn is_coisotropic(&self) -> bool {
        let c = symp_complement(self);
        c.dim() == 0 || self.contains(&c.basis, 1e-8)
    }

    pub fn is_symplectic(&self) -> bool {
        if self.dim() % 2 != 0 {
            return false;
        }
        if self.dim() == 0 {
            return true;
        }
        let g = self.ambient.omega(&self.basis, &self.basis);
        linalg::sigma_min(&g) > 1e-9 * form_scale(&self.ambient)
    }
}

fn form_scale(sp: &SymplecticSpace) -> f64 {
    linalg::max_abs(sp.form()).max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Isotropic,
    Coisotropic,
    Lagrangian,
    Symplectic,
    None,
}

/// Lagrangian takes precedence, then isotropic, coisotropic, symplectic.
pub fn classify(sub: &Subspace) -> Classification {
    let iso = sub.is_isotropic();
    let co = sub.is_coisotropic();
    match (iso, co) {
        (true, true) => Classification::Lagrangian,
        (true, false) => Classification::Isotropic,
        (false, true) => Classification::Coisotropic,
        _ if sub.is_symplectic() => Classification::Symplectic,
        _ => Classification::None,
    }
}

/// {v : ω(v, w) = 0 for all w in sub}.
pub fn symp_complement(sub: &Subspace) -> Subspace {
    let sp = sub.ambient();
    if sub.dim() == 0 {
        return Subspace::whole(sp);
    }
    let a = (sp.form() * sub.basis()).transpose();
    let scale = form_scale(sp);
    let ns = linalg::null_space(&(a / scale), 1e-9);
    Subspace { ambient: sp.clone(), basis: ns }
}

pub fn subspace_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    if a.ambient().dim() != b.ambient().dim() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces of dimension {} and {} in ambient {} and {}",
            a.dim(),
            b.dim(),
            a.ambient().dim(),
            b.ambient().dim()
        )));
    }
    Ok(linalg::gap(a.basis(), b.basis()))
}

/// Half-dimensional isotropic subspace with orthonormal columns.
#[derive(Clone, Debug)]
pub struct LagrangianFrame {
    space: SymplecticSpace,
    cols: Mat,
}

impl LagrangianFrame {
    pub fn new(space: &SymplecticSpace, cols: Mat) -> Result<Self> {
        let n = space.n();
        if cols.nrows() != 2 * n || cols.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "frame {}x{} in a space of dimension {}",
                cols.nrows(),
                cols.ncols(),
                2 * n
            )));
        }
        let scale = linalg::max_abs(&cols).max(1e-300);
        let q = linalg::orth(&(&cols / scale), 1e-10);
        if q.ncols() != n {
            return Err(Error::RankDeficient { rank: q.ncols(), expected: n });
        }
        let q = linalg::orth_k(&q, n);
        let res = linalg::max_abs(&space.omega(&q, &q)) / form_scale(space);
        if res > LAG_TOL {
            return Err(Error::NotLagrangian(res));
        }
        Ok(LagrangianFrame { space: space.clone(), cols: q })
    }

    /// Build from a frame given in the standard coordinates of `space`.
    pub fn from_std(space: &SymplecticSpace, g: &Mat) -> Result<Self> {
        Self::new(space, space.native_frame(g))
    }

    /// Skip validation; caller guarantees an orthonormal Lagrangian frame.
    pub(crate) fn trusted(space: &SymplecticSpace, cols: Mat) -> Self {
        LagrangianFrame { space: space.clone(), cols }
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn cols(&self) -> &Mat {
        &self.cols
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn std(&self) -> Mat {
        self.space.std_frame(&self.cols)
    }

    pub fn as_subspace(&self) -> Subspace {
        Subspace { ambient: self.space.clone(), basis: self.cols.clone() }
    }

    pub fn isotropy_residual(&self) -> f64 {
        linalg::max_abs(&self.space.omega(&self.cols, &self.cols)) / form_scale(&self.space)
    }

    pub fn distance(&self, other: &LagrangianFrame) -> f64 {
        linalg::gap(&self.cols, &other.cols)
    }

    /// Image under a linear map of the ambient space (assumed symplectic onto `target`).
    pub fn map(&self, target: &SymplecticSpace, m: &Mat) -> Result<Self> {
        Self::new(target, m * &self.cols)
    }

    pub fn dual(&self) -> Self {
        LagrangianFrame { space: self.space.dual(), cols: self.cols.clone() }
    }

    pub fn product(&self, other: &LagrangianFrame) -> Self {
        LagrangianFrame {
            space: self.space.product(&other.space),
            cols: linalg::block_diag(&self.cols, &other.cols),
        }
    }

    /// det(X+iY)^2 of the standard unitary frame.
    pub fn det2(&self) -> Complex64 {
        linalg::det2_phase(&self.std())
    }

    pub fn intersection_dim(&self, other: &LagrangianFrame, tol: f64) -> usize {
        let g = self.space.omega(&self.cols, &other.cols);
        linalg::singular_values(&g).iter().filter(|&&s| s <= tol).count() + (self.n() - g.nrows().min(self.n()))
    }

    pub fn transverse_to(&self, other: &LagrangianFrame) -> bool {
        let g = self.space.omega(&self.cols, &other.cols);
        self.n() == 0 || linalg::sigma_min(&g) > 1e-7 * form_scale(&self.space)
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-random unitary matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn random_lagrangian_rng<R: Rng>(space: &SymplecticSpace, rng: &mut R) -> LagrangianFrame {
    let u = random_unitary(space.n(), rng);
    let g = linalg::to_real(&u);
    if space.is_standard() {
        LagrangianFrame::trusted(space, g)
    } else {
        LagrangianFrame::from_std(space, &g).expect("image of a Lagrangian under a symplectomorphism")
    }
}

/// Deterministic random Lagrangian in standard R^{2n} from the columns of [X; Y]
/// for a Haar-random unitary X + iY.
pub fn random_lagrangian(n: usize, seed: u64) -> LagrangianFrame {
    let mut rng = rng_from_seed(seed);
    random_lagrangian_rng(&SymplecticSpace::standard(n), &mut rng)
}

/// Random symplectic matrix: unitary, diagonal stretch and symmetric shear factors.
pub fn random_symplectic<R: Rng>(n: usize, rng: &mut R, scale: f64) -> Mat {
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let u1 = unitary_as_real(&random_unitary(n, rng));
    let u2 = unitary_as_real(&random_unitary(n, rng));
    let mut stretch = Mat::identity(2 * n, 2 * n);
    for i in 0..n {
        let s: f64 = (rng.random::<f64>() - 0.5) * 2.0 * scale;
        stretch[(i, i)] = s.exp();
        stretch[(n + i, n + i)] = (-s).exp();
    }
    let mut shear = Mat::identity(2 * n, 2 * n);
    let h = Mat::from_fn(n, n, |_, _| (rng.random::<f64>() - 0.5) * scale);
    let h = linalg::symmetrize(&h);
    shear.view_mut((0, n), (n, n)).copy_from(&h);
    u1 * stretch * shear * u2
}

/// Real 2n×2n matrix of a complex n×n matrix acting on (x, y).
pub fn unitary_as_real(u: &CMat) -> Mat {
    let n = u.nrows();
    let mut m = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = u[(i, j)];
            m[(i, j)] = z.re;
            m[(i, n + j)] = -z.im;
            m[(n + i, j)] = z.im;
            m[(n + i, n + j)] = z.re;
        }
    }
    m
}

/// exp of the infinitesimally symplectic matrix Ωᵀ H for symmetric H.
pub fn symplectic_exp(h: &Mat) -> Mat {
    let n = h.nrows() / 2;
    let a = standard_form(n).transpose() * linalg::symmetrize(h);
    a.exp()
}

pub fn symplectic_residual(s: &Mat, sp: &SymplecticSpace) -> f64 {
    linalg::max_abs(&(s.transpose() * sp.form() * s - sp.form()))
}

// ---- JSON ----

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormJson {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceJson {
    pub n: usize,
    pub form: FormJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameJson {
    pub space: SpaceJson,
    pub columns: Vec<Vec<f64>>,
}

impl SpaceJson {
    pub fn from_space(sp: &SymplecticSpace) -> Self {
        if sp.is_standard() {
            SpaceJson { n: sp.n(), form: FormJson::Named("standard".into()) }
        } else {
            let f = sp.form();
            SpaceJson {
                n: sp.n(),
                form: FormJson::Matrix((0..f.nrows()).map(|i| (0..f.ncols()).map(|j| f[(i, j)]).collect()).collect()),
            }
        }
    }

    pub fn to_space(&self) -> Result<SymplecticSpace> {
        match &self.form {
            FormJson::Named(s) if s == "standard" => Ok(SymplecticSpace::standard(self.n)),
            FormJson::Named(s) => Err(Error::Invalid(format!("unknown form name '{s}'"))),
            FormJson::Matrix(rows) => {
                let d = 2 * self.n;
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Invalid(format!("form must be {d}x{d}")));
                }
                SymplecticSpace::from_form(Mat::from_fn(d, d, |i, j| rows[i][j]))
            }
        }
    }
}

pub fn columns_to_mat(rows: usize, columns: &[Vec<f64>]) -> Result<Mat> {
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::Invalid(format!("every column must have length {rows}")));
    }
    Ok(Mat::from_fn(rows, columns.len(), |i, j| columns[j][i]))
}

pub fn mat_to_columns(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|j| m.column(j).iter().copied().collect()).collect()
}

impl FrameJson {
    pub fn from_frame(f: &LagrangianFrame) -> Self {
        FrameJson { space: SpaceJson::from_space(f.space()), columns: mat_to_columns(f.cols()) }
    }

    pub fn to_frame(&self) -> Result<LagrangianFrame> {
        let sp = self.space.to_space()?;
        LagrangianFrame::new(&sp, columns_to_mat(sp.dim(), &self.columns)?)
    }
}
