//! Integer matrices: Smith normal form with unimodular transforms, lattice kernels and
//! solutions of congruences modulo Z^d.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

pub type IMat = DMatrix<i128>;

/// U·A·V = D with U, V unimodular and D diagonal, d_1 | d_2 | ... , d_i ≥ 0.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: IMat,
    pub v: IMat,
    pub diag: Vec<i128>,
    pub rank: usize,
}

fn overflow() -> Error {
    Error::Invalid("integer overflow in normal form computation".into())
}

fn mul_add(a: i128, q: i128, b: i128) -> Result<i128> {
    // a - q*b
    q.checked_mul(b).and_then(|p| a.checked_sub(p)).ok_or_else(overflow)
}

fn row_op(m: &mut IMat, target: usize, src: usize, q: i128) -> Result<()> {
    for c in 0..m.ncols() {
        m[(target, c)] = mul_add(m[(target, c)], q, m[(src, c)])?;
    }
    Ok(())
}

fn col_op(m: &mut IMat, target: usize, src: usize, q: i128) -> Result<()> {
    for r in 0..m.nrows() {
        m[(r, target)] = mul_add(m[(r, target)], q, m[(r, src)])?;
    }
    Ok(())
}

pub fn smith(a: &IMat) -> Result<Smith> {
    let (m, n) = a.shape();
    let mut d = a.clone();
    let mut u = IMat::identity(m, m);
    let mut v = IMat::identity(n, n);
    let mut rank = 0;
    for t in 0..m.min(n) {
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if d[(i, j)] != 0 && best.is_none_or(|(bi, bj)| d[(i, j)].abs() < d[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_columns(t, pj);
        v.swap_columns(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..m {
                let q = d[(i, t)].div_euclid(d[(t, t)]);
                if q != 0 {
                    row_op(&mut d, i, t, q)?;
                    row_op(&mut u, i, t, q)?;
                }
                if d[(i, t)] != 0 {
                    dirty = true;
                }
            }
            for j in t + 1..n {
                let q = d[(t, j)].div_euclid(d[(t, t)]);
                if q != 0 {
                    col_op(&mut d, j, t, q)?;
                    col_op(&mut v, j, t, q)?;
                }
                if d[(t, j)] != 0 {
                    dirty = true;
                }
            }
            if dirty {
                // a nonzero remainder is smaller than the pivot; bring the smallest entry of
                // row and column t to the pivot position
                let mut best = (t, t);
                for i in t + 1..m {
                    if d[(i, t)] != 0 && d[(i, t)].abs() < d[best].abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..n {
                    if d[(t, j)] != 0 && d[(t, j)].abs() < d[best].abs() {
                        best = (t, j);
                    }
                }
                if best.0 != t {
                    d.swap_rows(t, best.0);
                    u.swap_rows(t, best.0);
                } else if best.1 != t {
                    d.swap_columns(t, best.1);
                    v.swap_columns(t, best.1);
                }
                continue;
            }
            let p = d[(t, t)];
            let bad = (t + 1..m).flat_map(|i| (t + 1..n).map(move |j| (i, j))).find(|&(i, j)| d[(i, j)] % p != 0);
            match bad {
                Some((i, _)) => {
                    row_op(&mut d, t, i, -1)?;
                    row_op(&mut u, t, i, -1)?;
                }
                None => break,
            }
        }
        if d[(t, t)] < 0 {
            for c in 0..n {
                d[(t, c)] = -d[(t, c)];
            }
            for c in 0..m {
                u[(t, c)] = -u[(t, c)];
            }
        }
        rank += 1;
    }
    let diag = (0..m.min(n)).map(|i| d[(i, i)]).collect();
    Ok(Smith { u, v, diag, rank })
}

/// Nonzero invariant factors.
pub fn invariant_factors(a: &IMat) -> Result<Vec<i128>> {
    let s = smith(a)?;
    Ok(s.diag[..s.rank].to_vec())
}

/// |det| of a square matrix as the product of its invariant factors.
pub fn abs_det(a: &IMat) -> Result<i128> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("determinant of a non-square matrix".into()));
    }
    let s = smith(a)?;
    if s.rank < a.nrows() {
        return Ok(0);
    }
    s.diag.iter().try_fold(1i128, |acc, &x| acc.checked_mul(x).ok_or_else(overflow))
}

/// A basis of the lattice {v ∈ Z^n : A v = 0}, as columns.
pub fn kernel_basis(a: &IMat) -> Result<IMat> {
    let s = smith(a)?;
    let n = a.ncols();
    Ok(s.v.columns(s.rank, n - s.rank).into_owned())
}

/// True when the columns of `a` form a basis of (span_R a) ∩ Z^m.
pub fn is_primitive(a: &IMat) -> Result<bool> {
    let s = smith(a)?;
    Ok(s.rank == a.ncols() && s.diag[..s.rank].iter().all(|&d| d == 1))
}

pub fn to_f64(a: &IMat) -> crate::linalg::Mat {
    a.map(|x| x as f64)
}

pub fn from_i64(a: &DMatrix<i64>) -> IMat {
    a.map(|x| x as i128)
}

/// Reduce into [0, 1) with values within `tol` of 1 folded to 0.
pub fn frac(x: f64, tol: f64) -> f64 {
    let f = x.rem_euclid(1.0);
    if f > 1.0 - tol {
        0.0
    } else {
        f
    }
}

/// Distance from x to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Solutions of K s ≡ c (mod Z^m) for s ∈ R^n / Z^n, when the solution set is finite.
pub enum Congruence {
    /// Complete list of solutions, each reduced into [0,1)^n.
    Finite(Vec<Vec<f64>>),
    /// No solution.
    Empty,
    /// A positive-dimensional solution set, with one of its points.
    Degenerate { witness: Vec<f64>, dim: usize },
}

/// Solves the congruence via the normal form: with D = U K V, t = V⁻¹ s satisfies
/// d_i t_i ≡ (U c)_i.
pub fn solve_congruence(k: &IMat, c: &[f64], tol: f64, limit: usize) -> Result<Congruence> {
    let (m, n) = k.shape();
    if c.len() != m {
        return Err(Error::DimensionMismatch("right-hand side length".into()));
    }
    let s = smith(k)?;
    let uc: Vec<f64> = (0..m).map(|i| (0..m).map(|j| s.u[(i, j)] as f64 * c[j]).sum()).collect();
    if uc[s.rank..].iter().any(|x| dist_to_int(*x) > tol) {
        return Ok(Congruence::Empty);
    }
    let count = s.diag[..s.rank].iter().try_fold(1u128, |acc, &d| acc.checked_mul(d as u128));
    let count = count.ok_or_else(overflow)?;
    if count > limit as u128 {
        return Err(Error::Invalid(format!("{count} solutions exceed the enumeration limit {limit}")));
    }
    let vf = to_f64(&s.v);
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0i128; s.rank];
    loop {
        let mut t = vec![0.0; n];
        for i in 0..s.rank {
            t[i] = (uc[i] + idx[i] as f64) / s.diag[i] as f64;
        }
        let sol: Vec<f64> = (0..n).map(|r| frac((0..n).map(|q| vf[(r, q)] * t[q]).sum(), tol)).collect();
        out.push(sol);
        let mut pos = 0;
        while pos < s.rank {
            idx[pos] += 1;
            if idx[pos] < s.diag[pos] {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == s.rank {
            break;
        }
    }
    if s.rank < n {
        return Ok(Congruence::Degenerate { witness: out.swap_remove(0), dim: n - s.rank });
    }
    Ok(Congruence::Finite(out))
}
