//! Lattice tori R^{2n}/Z^{2n} with constant symplectic forms ⊕ ±Ω and their affine
//! Lagrangian subtori with integer direction lattices.

use crate::corrlin::LinearCorrespondence;
use crate::error::{Error, Result};
use crate::intlin::{self, IMat};
use crate::symplinalg::{LagrangianFrame, SymplecticSpace};
use serde::{Deserialize, Serialize};

/// Product of standard tori T^{2n_i}, each with form ±Ω; coordinates (x_1, y_1, x_2, y_2, …).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Torus {
    blocks: Vec<(usize, i8)>,
}

pub fn torus_provider(n: usize) -> Torus {
    Torus::standard(n)
}

impl Torus {
    pub fn standard(n: usize) -> Self {
        Torus::from_blocks(vec![(n, 1)])
    }

    pub fn point() -> Self {
        Torus { blocks: Vec::new() }
    }

    /// Empty blocks are dropped; signs are normalized to ±1.
    pub fn from_blocks(blocks: Vec<(usize, i8)>) -> Self {
        Torus { blocks: blocks.into_iter().filter(|b| b.0 > 0).map(|(n, s)| (n, if s < 0 { -1 } else { 1 })).collect() }
    }

    pub fn blocks(&self) -> &[(usize, i8)] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(|b| b.0).sum()
    }

    pub fn dim(&self) -> usize {
        2 * self.n()
    }

    pub fn is_point(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dual(&self) -> Self {
        Torus { blocks: self.blocks.iter().map(|&(n, s)| (n, -s)).collect() }
    }

    pub fn product(&self, other: &Torus) -> Self {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().copied());
        Torus { blocks }
    }

    /// The linear symplectic space of constant vector fields.
    pub fn space(&self) -> SymplecticSpace {
        self.blocks.iter().fold(SymplecticSpace::point(), |acc, &(n, s)| {
            let b = SymplecticSpace::standard(n);
            acc.product(&if s < 0 { b.dual() } else { b })
        })
    }

    /// The form as an integer matrix.
    pub fn int_form(&self) -> IMat {
        let d = self.dim();
        let mut w = IMat::zeros(d, d);
        let mut at = 0;
        for &(n, s) in &self.blocks {
            for i in 0..n {
                w[(at + i, at + n + i)] = s as i128;
                w[(at + n + i, at + i)] = -(s as i128);
            }
            at += 2 * n;
        }
        w
    }
}

/// V0⁻ × V1 as a torus.
pub fn correspondence_torus(source: &Torus, target: &Torus) -> Torus {
    source.dual().product(target)
}

/// Distance of a coordinate vector from the lattice Z^d.
pub fn lattice_distance(v: &[f64]) -> f64 {
    v.iter().map(|x| intlin::dist_to_int(*x)).fold(0.0, f64::max)
}

pub fn reduce_point(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| intlin::frac(*x, 1e-12)).collect()
}

/// o + span_Z(A) ⊗ R mod Z^d, with A primitive and its span Lagrangian.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeLagrangian {
    ambient: Torus,
    directions: IMat,
    offset: Vec<f64>,
}

impl LatticeLagrangian {
    pub fn new(ambient: &Torus, directions: IMat, offset: Vec<f64>) -> Result<Self> {
        let (d, n) = (ambient.dim(), ambient.n());
        if directions.nrows() != d || directions.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "direction matrix is {}x{}, expected {}x{}",
                directions.nrows(),
                directions.ncols(),
                d,
                n
            )));
        }
        if offset.len() != d {
            return Err(Error::DimensionMismatch(format!("offset has length {}, expected {d}", offset.len())));
        }
        if offset.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("offset is not finite".into()));
        }
        let gram = directions.transpose() * ambient.int_form() * &directions;
        if let Some(((i, j), v)) = gram.iter().enumerate().map(|(k, v)| ((k % n, k / n), *v)).find(|(_, v)| *v != 0) {
            return Err(Error::Invalid(format!("direction lattice is not Lagrangian: ω(a_{i}, a_{j}) = {v}")));
        }
        let smith = intlin::smith(&directions)?;
        if smith.rank < n {
            return Err(Error::RankDeficient { rank: smith.rank, expected: n });
        }
        if !smith.diag[..n].iter().all(|&x| x == 1) {
            return Err(Error::Invalid(format!(
                "direction lattice is not primitive (invariant factors {:?})",
                &smith.diag[..n]
            )));
        }
        Ok(LatticeLagrangian { ambient: ambient.clone(), directions, offset: reduce_point(&offset) })
    }

    pub fn ambient(&self) -> &Torus {
        &self.ambient
    }

    pub fn directions(&self) -> &IMat {
        &self.directions
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// o + A s mod Z^d.
    pub fn point(&self, s: &[f64]) -> Vec<f64> {
        let a = intlin::to_f64(&self.directions);
        (0..self.ambient.dim()).map(|i| self.offset[i] + (0..s.len()).map(|k| a[(i, k)] * s[k]).sum::<f64>()).collect()
    }

    /// Membership of a point mod Z^d: p − o ∈ span(A) + Z^d.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        if p.len() != self.ambient.dim() {
            return false;
        }
        let smith = intlin::smith(&self.directions).expect("validated at construction");
        let diff: Vec<f64> = p.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        let d = diff.len();
        (smith.rank..d).all(|i| intlin::dist_to_int((0..d).map(|j| smith.u[(i, j)] as f64 * diff[j]).sum()) <= tol)
    }

    /// Tangent Lagrangian frame.
    pub fn tangent(&self) -> Result<LagrangianFrame> {
        LagrangianFrame::new(&self.ambient.space(), intlin::to_f64(&self.directions))
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        let offset = self.offset.iter().zip(v).map(|(a, b)| a + b).collect::<Vec<_>>();
        LatticeLagrangian { offset: reduce_point(&offset), ..self.clone() }
    }

    pub fn product(&self, other: &LatticeLagrangian) -> Self {
        let (d1, k1) = self.directions.shape();
        let (d2, k2) = other.directions.shape();
        let mut a = IMat::zeros(d1 + d2, k1 + k2);
        a.view_mut((0, 0), (d1, k1)).copy_from(&self.directions);
        a.view_mut((d1, k1), (d2, k2)).copy_from(&other.directions);
        let mut offset = self.offset.clone();
        offset.extend_from_slice(&other.offset);
        LatticeLagrangian { ambient: self.ambient.product(&other.ambient), directions: a, offset }
    }

    /// Z ↦ Zᵀ under first × rest → rest × first.
    pub fn exchanged(&self, first: &Torus, rest: &Torus) -> Result<Self> {
        if first.product(rest) != self.ambient {
            return Err(Error::SpaceMismatch("torus is not the given product".into()));
        }
        let (df, dr) = (first.dim(), rest.dim());
        let k = self.directions.ncols();
        let mut a = IMat::zeros(df + dr, k);
        a.view_mut((0, 0), (dr, k)).copy_from(&self.directions.rows(df, dr));
        a.view_mut((dr, 0), (df, k)).copy_from(&self.directions.rows(0, df));
        let mut offset = self.offset[df..].to_vec();
        offset.extend_from_slice(&self.offset[..df]);
        Ok(LatticeLagrangian { ambient: rest.product(first), directions: a, offset })
    }
}

/// An affine Lagrangian subtorus of M_a⁻ × M_b.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeCorrespondence {
    source: Torus,
    target: Torus,
    lag: LatticeLagrangian,
}

pub fn correspondence_from_lattice(source: &Torus, target: &Torus, a: &IMat, offset: &[f64]) -> Result<LatticeCorrespondence> {
    let amb = correspondence_torus(source, target);
    let lag = LatticeLagrangian::new(&amb, a.clone(), offset.to_vec())?;
    Ok(LatticeCorrespondence { source: source.clone(), target: target.clone(), lag })
}

impl LatticeCorrespondence {
    pub fn from_lagrangian(source: &Torus, target: &Torus, lag: LatticeLagrangian) -> Result<Self> {
        if correspondence_torus(source, target) != lag.ambient {
            return Err(Error::SpaceMismatch("subtorus does not live in source⁻ × target".into()));
        }
        Ok(LatticeCorrespondence { source: source.clone(), target: target.clone(), lag })
    }

    /// A Lagrangian subtorus of `torus` seen from the point.
    pub fn from_point(lag: LatticeLagrangian) -> Self {
        LatticeCorrespondence { source: Torus::point(), target: lag.ambient.clone(), lag }
    }

    /// A Lagrangian subtorus of `torus⁻` seen as a correspondence to the point.
    pub fn to_point(lag: LatticeLagrangian) -> Self {
        LatticeCorrespondence { source: lag.ambient.dual(), target: Torus::point(), lag }
    }

    pub fn source(&self) -> &Torus {
        &self.source
    }

    pub fn target(&self) -> &Torus {
        &self.target
    }

    pub fn lag(&self) -> &LatticeLagrangian {
        &self.lag
    }

    pub fn source_rows(&self) -> IMat {
        self.lag.directions.rows(0, self.source.dim()).into_owned()
    }

    pub fn target_rows(&self) -> IMat {
        self.lag.directions.rows(self.source.dim(), self.target.dim()).into_owned()
    }

    pub fn source_offset(&self) -> &[f64] {
        &self.lag.offset[..self.source.dim()]
    }

    pub fn target_offset(&self) -> &[f64] {
        &self.lag.offset[self.source.dim()..]
    }

    pub fn contains(&self, x: &[f64], y: &[f64], tol: f64) -> bool {
        let mut p = x.to_vec();
        p.extend_from_slice(y);
        self.lag.contains(&p, tol)
    }

    pub fn tangent(&self) -> Result<LinearCorrespondence> {
        LinearCorrespondence::new(&self.source.space(), &self.target.space(), intlin::to_f64(&self.lag.directions))
    }

    /// {(x − v, y) : (x, y) ∈ L}.
    pub fn shift_source(&self, v: &[f64]) -> Self {
        let mut t: Vec<f64> = v.iter().map(|x| -x).collect();
        t.resize(self.lag.ambient.dim(), 0.0);
        LatticeCorrespondence { lag: self.lag.translated(&t), ..self.clone() }
    }

    pub fn transpose(&self) -> Self {
        let lag = self
            .lag
            .exchanged(&self.source.dual(), &self.target)
            .expect("ambient is source⁻ × target");
        // (M_b × M_a⁻) carries the negated form of M_b⁻ × M_a
        let lag = LatticeLagrangian { ambient: correspondence_torus(&self.target, &self.source), ..lag };
        LatticeCorrespondence { source: self.target.clone(), target: self.source.clone(), lag }
    }

    /// Splits L = L_a × L_b with L_a ⊂ source⁻, L_b ⊂ target, when the direction lattice does.
    pub fn split(&self) -> Option<(LatticeLagrangian, LatticeLagrangian)> {
        let (ds, dt) = (self.source.dim(), self.target.dim());
        let (ks, kt) = (self.source.n(), self.target.n());
        let a_s = self.source_rows();
        let a_t = self.target_rows();
        let ka = intlin::kernel_basis(&a_t).ok()?;
        let kb = intlin::kernel_basis(&a_s).ok()?;
        if ka.ncols() != ks || kb.ncols() != kt {
            return None;
        }
        let la = LatticeLagrangian::new(&self.source.dual(), &a_s * ka, self.lag.offset[..ds].to_vec()).ok()?;
        let lb = LatticeLagrangian::new(&self.target, &a_t * kb, self.lag.offset[ds..ds + dt].to_vec()).ok()?;
        Some((la, lb))
    }

    /// L_a × L_b for L_a ⊂ source⁻ and L_b ⊂ target.
    pub fn split_product(a: &LatticeLagrangian, b: &LatticeLagrangian) -> Self {
        LatticeCorrespondence { source: a.ambient.dual(), target: b.ambient.clone(), lag: a.product(b) }
    }
}

/// The diagonal {(x, x)} ⊂ M⁻ × M.
pub fn lattice_diagonal(m: &Torus) -> LatticeCorrespondence {
    let d = m.dim();
    let mut a = IMat::zeros(2 * d, d);
    for i in 0..d {
        a[(i, i)] = 1;
        a[(d + i, i)] = 1;
    }
    correspondence_from_lattice(m, m, &a, &vec![0.0; 2 * d]).expect("diagonal is a primitive Lagrangian lattice")
}

/// Columns as integer lists.
pub fn int_columns(a: &IMat) -> Vec<Vec<i64>> {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|&x| x as i64).collect()).collect()
}

pub fn from_int_columns(rows: usize, cols: &[Vec<i64>]) -> Result<IMat> {
    if let Some(c) = cols.iter().find(|c| c.len() != rows) {
        return Err(Error::DimensionMismatch(format!("direction column of length {}, expected {rows}", c.len())));
    }
    Ok(IMat::from_fn(rows, cols.len(), |i, j| cols[j][i] as i128))
}
