//! Dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Default numerical rank threshold for unit-normalized data.
pub const RANK_TOL: f64 = 1e-9;

/// Copy for faer with entries below `rel`·max|a| set to zero; tiny nonzero entries far below
/// the working precision can stall the iteration.
fn to_faer(a: &Mat, rel: f64) -> faer::Mat<f64> {
    let floor = (rel * max_abs(a)).max(1e-300);
    faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| if a[(i, j)].abs() < floor { 0.0 } else { a[(i, j)] })
}

/// Thin SVD `a = U diag(s) Vᵀ` with singular values in descending order.
pub fn svd(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (r, c) = (a.nrows(), a.ncols());
    let k = r.min(c);
    if k == 0 {
        return (Mat::zeros(r, 0), Vec::new(), Mat::zeros(c, 0));
    }
    let d = to_faer(a, 0.0).thin_svd().or_else(|_| to_faer(a, 1e-17).thin_svd()).expect("svd converges");
    let s: Vec<f64> = d.S().column_vector().iter().copied().collect();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let (u, v) = (d.U(), d.V());
    let um = Mat::from_fn(r, k, |i, j| u[(i, idx[j])]);
    let vm = Mat::from_fn(c, k, |i, j| v[(i, idx[j])]);
    (um, idx.iter().map(|&i| s[i]).collect(), vm)
}

/// Column-space basis with orthonormal columns; singular values below `tol` are dropped.
pub fn orth(a: &Mat, tol: f64) -> Mat {
    let (u, s, _) = svd(a);
    let keep = s.iter().take_while(|&&x| x > tol).count();
    u.columns(0, keep).into_owned()
}

/// The `k` dominant left singular vectors.
pub fn orth_k(a: &Mat, k: usize) -> Mat {
    let (u, _, _) = svd(a);
    u.columns(0, k.min(u.ncols())).into_owned()
}

/// Singular values in descending order, without singular vectors.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    if a.nrows().min(a.ncols()) == 0 {
        return Vec::new();
    }
    let f = to_faer(a, 0.0);
    let mut s = f.singular_values().or_else(|_| to_faer(a, 1e-17).singular_values()).expect("svd converges");
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Smallest singular value, counting missing ones (wide matrices) as zero.
pub fn sigma_min(a: &Mat) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    if a.ncols() < a.nrows() {
        return 0.0;
    }
    singular_values(a).last().copied().unwrap_or(0.0)
}

pub fn rank(a: &Mat, tol: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > tol).count()
}

pub fn select_cols(a: &Mat, idx: &[usize]) -> Mat {
    let mut out = Mat::zeros(a.nrows(), idx.len());
    for (k, &i) in idx.iter().enumerate() {
        out.set_column(k, &a.column(i));
    }
    out
}

pub fn hstack(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

pub fn vstack(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), 0), (b.nrows(), b.ncols())).copy_from(b);
    out
}

pub fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

pub fn rows(a: &Mat, start: usize, len: usize) -> Mat {
    a.rows(start, len).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the span of orthonormal `q` in R^dim.
pub fn complement(q: &Mat, dim: usize) -> Mat {
    if q.ncols() == 0 {
        return Mat::identity(dim, dim);
    }
    if dim == 0 {
        return Mat::zeros(0, 0);
    }
    let p = Mat::identity(dim, dim) - q * q.transpose();
    let eig = SymmetricEigen::new(p);
    let mut idx: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    select_cols(&eig.eigenvectors, &idx)
}

/// Orthonormal basis of the null space of `a`.
pub fn null_space(a: &Mat, tol: f64) -> Mat {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Mat::identity(n, n);
    }
    let row = orth(&a.transpose(), tol);
    complement(&row, n)
}

/// Orthonormal basis of span(a) ∩ span(b) for orthonormal inputs.
pub fn intersect(a: &Mat, b: &Mat, tol: f64) -> Mat {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Mat::zeros(a.nrows(), 0);
    }
    let stacked = hstack(a, &(-b));
    let ns = null_space(&stacked, tol);
    let xa = rows(&ns, 0, a.ncols());
    orth(&(a * xa), 1e-6)
}

/// Gap distance between spans of orthonormal `a` and `b` of equal dimension.
pub fn gap(a: &Mat, b: &Mat) -> f64 {
    if a.ncols() == 0 && b.ncols() == 0 {
        return 0.0;
    }
    let r = b - a * (a.transpose() * b);
    let r2 = a - b * (b.transpose() * a);
    let s1 = singular_values(&r).first().copied().unwrap_or(0.0);
    let s2 = singular_values(&r2).first().copied().unwrap_or(0.0);
    s1.max(s2).min(1.0)
}

/// Orthonormal basis of the span of a full-rank tall matrix via Householder QR.
pub fn qr_orth(a: &Mat) -> Mat {
    if a.ncols() == 0 {
        return Mat::zeros(a.nrows(), 0);
    }
    a.clone().qr().q().columns(0, a.ncols()).into_owned()
}

/// Re-orthonormalize a full-rank frame, keeping its span.
pub fn reorthonormalize(a: &Mat) -> Mat {
    orth_k(a, a.ncols())
}

pub fn symmetrize(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &Mat) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrize(a)).eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

/// Complex n×k matrix X + iY of a real 2n×k frame in standard coordinates.
pub fn to_complex(f: &Mat) -> CMat {
    let n = f.nrows() / 2;
    CMat::from_fn(n, f.ncols(), |i, j| Complex64::new(f[(i, j)], f[(i + n, j)]))
}

/// Real 2n×k stacking [Re; Im] of a complex n×k matrix.
pub fn to_real(u: &CMat) -> Mat {
    let n = u.nrows();
    Mat::from_fn(2 * n, u.ncols(), |i, j| if i < n { u[(i, j)].re } else { u[(i - n, j)].im })
}

/// det(X+iY)^2 normalized to unit modulus.
pub fn det2_phase(std_frame: &Mat) -> Complex64 {
    if std_frame.ncols() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let d = to_complex(std_frame).determinant();
    let d2 = d * d;
    d2 / d2.norm()
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_tall_matrix_has_exact_left_vector() {
        let bits: [u64; 10] = [
            4574278464827102596,
            13819863362111793670,
            4598580485349067306,
            4595939972178621960,
            4598775935047737516,
            4580931848434397436,
            13826610898344986741,
            4604963612767471342,
            4602857632716178970,
            4605233897098614444,
        ];
        let m = Mat::from_iterator(5, 2, bits.iter().map(|b| f64::from_bits(*b)));
        let (u, s, v) = svd(&m);
        assert!((s[0] - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(s[1] < 1e-14);
        let recon = &u * Mat::from_diagonal(&nalgebra::DVector::from_vec(s.clone())) * v.transpose();
        assert!(max_abs(&(recon - &m)) < 1e-14);
        let ns = null_space(&m.transpose(), 1e-9);
        assert_eq!(ns.ncols(), 4);
        assert!(max_abs(&(m.transpose() * ns)) < 1e-14);
    }

    #[test]
    fn values_only_svd_matches_full_svd() {
        let m = Mat::from_fn(6, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * i as f64);
        let a = singular_values(&m);
        let b = svd(&m).1;
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn intersect_and_gap() {
        let a = Mat::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let b = orth(&Mat::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 1.0, 1.0]), 1e-12);
        let i = intersect(&a, &b, 1e-9);
        assert_eq!(i.ncols(), 1);
        assert!((i[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((gap(&a, &b) - 1.0).abs() < 1e-12);
        assert_eq!(gap(&a, &a), 0.0);
    }

    #[test]
    fn det2_of_real_frame_is_one() {
        let f = Mat::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let d = det2_phase(&f);
        assert!((d - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let g = Mat::from_column_slice(2, 1, &[0.0, 1.0]);
        assert!((det2_phase(&g) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }
}
