//! Z_N-graded cochain complexes over the integers, oracle-supplied differentials, tensor
//! products and homology through the Smith normal form.

use crate::error::{Error, Result};
use crate::intlin::{self, IMat};
use nalgebra::DMatrix;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Free Z_N-graded complex with a differential of degree +1.
/// Entry (t, s) of the differential is the coefficient of e_t in ∂e_s.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedChainComplex {
    degrees: Vec<i64>,
    differential: DMatrix<i64>,
    modulus: i64,
}

/// Signed counts for ordered generator pairs (from, to).
pub trait DifferentialOracle {
    fn count(&self, from: usize, to: usize) -> i64;
}

pub struct ZeroOracle;

impl DifferentialOracle for ZeroOracle {
    fn count(&self, _: usize, _: usize) -> i64 {
        0
    }
}

/// Counts listed explicitly; missing pairs count zero.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TableOracle {
    pub entries: Vec<OracleEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleEntry {
    pub from: usize,
    pub to: usize,
    pub count: i64,
}

impl DifferentialOracle for TableOracle {
    fn count(&self, from: usize, to: usize) -> i64 {
        self.entries.iter().filter(|e| e.from == from && e.to == to).map(|e| e.count).sum()
    }
}

impl<F: Fn(usize, usize) -> i64> DifferentialOracle for F {
    fn count(&self, from: usize, to: usize) -> i64 {
        self(from, to)
    }
}

fn check_modulus(n: i64) -> Result<()> {
    if n <= 0 || n % 2 != 0 {
        return Err(Error::InvalidModulus(n));
    }
    Ok(())
}

impl GradedChainComplex {
    /// Validates that the differential has degree one and squares to zero.
    pub fn new(degrees: Vec<i64>, differential: DMatrix<i64>, modulus: i64) -> Result<Self> {
        check_modulus(modulus)?;
        let g = degrees.len();
        if differential.shape() != (g, g) {
            return Err(Error::DimensionMismatch(format!(
                "differential is {}x{} for {g} generators",
                differential.nrows(),
                differential.ncols()
            )));
        }
        let degrees: Vec<i64> = degrees.iter().map(|d| d.rem_euclid(modulus)).collect();
        for s in 0..g {
            for t in 0..g {
                let c = differential[(t, s)];
                if c != 0 && degrees[t] != (degrees[s] + 1).rem_euclid(modulus) {
                    return Err(Error::Oracle(format!(
                        "count {c} from generator {s} (degree {}) to generator {t} (degree {}) does not raise the degree by one",
                        degrees[s], degrees[t]
                    )));
                }
            }
        }
        let wide = differential.map(|x| x as i128);
        let sq = &wide * &wide;
        if let Some(k) = sq.iter().position(|&x| x != 0) {
            let (t, s) = (k % g, k / g);
            return Err(Error::Oracle(format!(
                "∂² ≠ 0: coefficient {} from generator {s} to generator {t}",
                sq[(t, s)]
            )));
        }
        Ok(GradedChainComplex { degrees, differential, modulus })
    }

    /// Queries the oracle on every ordered pair; pairs of non-adjacent degree must count zero.
    pub fn from_oracle<O: DifferentialOracle + ?Sized>(degrees: Vec<i64>, modulus: i64, oracle: &O) -> Result<Self> {
        let g = degrees.len();
        let d = DMatrix::from_fn(g, g, |t, s| oracle.count(s, t));
        Self::new(degrees, d, modulus)
    }

    pub fn zero(degrees: Vec<i64>, modulus: i64) -> Result<Self> {
        Self::from_oracle(degrees, modulus, &ZeroOracle)
    }

    pub fn degrees(&self) -> &[i64] {
        &self.degrees
    }

    pub fn differential(&self) -> &DMatrix<i64> {
        &self.differential
    }

    pub fn modulus(&self) -> i64 {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    fn indices(&self, d: i64) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.degrees[i] == d.rem_euclid(self.modulus)).collect()
    }

    /// Block C^d → C^{d+1}.
    pub fn block(&self, d: i64) -> IMat {
        let src = self.indices(d);
        let tgt = self.indices(d + 1);
        IMat::from_fn(tgt.len(), src.len(), |i, j| self.differential[(tgt[i], src[j])] as i128)
    }

    /// Generators relabelled so that new generator i is old generator perm[i].
    pub fn reindexed(&self, perm: &[usize]) -> Result<Self> {
        let g = self.len();
        let mut seen = vec![false; g];
        if perm.len() != g || perm.iter().any(|&p| p >= g || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Invalid("reindexing is not a permutation".into()));
        }
        let degrees = perm.iter().map(|&p| self.degrees[p]).collect();
        let d = DMatrix::from_fn(g, g, |t, s| self.differential[(perm[t], perm[s])]);
        Self::new(degrees, d, self.modulus)
    }

    /// Conjugation by the diagonal sign change e_i ↦ signs[i]·e_i.
    pub fn sign_changed(&self, signs: &[i64]) -> Result<Self> {
        let g = self.len();
        if signs.len() != g || signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::Invalid("sign change needs ±1 per generator".into()));
        }
        let d = DMatrix::from_fn(g, g, |t, s| signs[t] * self.differential[(t, s)] * signs[s]);
        Self::new(self.degrees.clone(), d, self.modulus)
    }

    /// True when both differentials agree modulo two.
    pub fn agrees_mod2(&self, other: &GradedChainComplex) -> bool {
        self.degrees == other.degrees
            && self.differential.shape() == other.differential.shape()
            && self.differential.iter().zip(other.differential.iter()).all(|(a, b)| (a - b).rem_euclid(2) == 0)
    }
}

/// Finitely generated abelian group Z^betti ⊕ ⊕ Z/t_i with t_i > 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianGroup {
    pub betti: usize,
    pub torsion: Vec<i64>,
}

impl AbelianGroup {
    pub fn free(betti: usize) -> Self {
        AbelianGroup { betti, torsion: Vec::new() }
    }

    /// Canonical form with torsion given by invariant factors t_1 | t_2 | ….
    pub fn normalized(&self) -> Self {
        let prime_powers = elementary_divisors(&self.torsion);
        let mut by_prime: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
        for (p, q) in prime_powers {
            by_prime.entry(p).or_default().push(q);
        }
        for v in by_prime.values_mut() {
            v.sort_unstable_by(|a, b| b.cmp(a));
        }
        let len = by_prime.values().map(Vec::len).max().unwrap_or(0);
        let mut torsion: Vec<i64> = (0..len).map(|i| by_prime.values().map(|v| v.get(i).copied().unwrap_or(1)).product()).collect();
        torsion.reverse();
        AbelianGroup { betti: self.betti, torsion }
    }

    pub fn is_isomorphic(&self, other: &AbelianGroup) -> bool {
        self.normalized() == other.normalized()
    }

    pub fn direct_sum(&self, other: &AbelianGroup) -> Self {
        let mut torsion = self.torsion.clone();
        torsion.extend_from_slice(&other.torsion);
        AbelianGroup { betti: self.betti + other.betti, torsion }.normalized()
    }

    pub fn tensor(&self, other: &AbelianGroup) -> Self {
        let mut torsion = Vec::new();
        for _ in 0..other.betti {
            torsion.extend_from_slice(&self.torsion);
        }
        for _ in 0..self.betti {
            torsion.extend_from_slice(&other.torsion);
        }
        for a in &self.torsion {
            for b in &other.torsion {
                torsion.push(a.gcd(b));
            }
        }
        torsion.retain(|&t| t > 1);
        AbelianGroup { betti: self.betti * other.betti, torsion }.normalized()
    }

    pub fn tor(&self, other: &AbelianGroup) -> Self {
        let mut torsion: Vec<i64> = self.torsion.iter().flat_map(|a| other.torsion.iter().map(move |b| a.gcd(b))).collect();
        torsion.retain(|&t| t > 1);
        AbelianGroup { betti: 0, torsion }.normalized()
    }

    pub fn is_zero(&self) -> bool {
        self.betti == 0 && self.torsion.is_empty()
    }
}

/// Prime-power factors (p, p^k) of a list of cyclic orders.
fn elementary_divisors(orders: &[i64]) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for &t in orders {
        let mut m = t;
        let mut p = 2;
        while p * p <= m {
            if m % p == 0 {
                let mut q = 1;
                while m % p == 0 {
                    m /= p;
                    q *= p;
                }
                out.push((p, q));
            }
            p += 1;
        }
        if m > 1 {
            out.push((m, m));
        }
    }
    out
}

/// H^d for d = 0..N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Homology {
    pub modulus: i64,
    pub groups: Vec<AbelianGroup>,
}

impl Homology {
    pub fn total_rank(&self) -> usize {
        self.groups.iter().map(|g| g.betti).sum()
    }

    pub fn is_isomorphic(&self, other: &Homology) -> bool {
        self.modulus == other.modulus && self.groups.iter().zip(&other.groups).all(|(a, b)| a.is_isomorphic(b))
    }
}

/// H^d = ker(C^d → C^{d+1}) / im(C^{d−1} → C^d), read off the normal forms of the blocks.
pub fn homology(cx: &GradedChainComplex) -> Result<Homology> {
    let n = cx.modulus;
    let mut ranks = Vec::with_capacity(n as usize);
    let mut factors = Vec::with_capacity(n as usize);
    for d in 0..n {
        let f = intlin::invariant_factors(&cx.block(d))?;
        ranks.push(f.len());
        factors.push(f);
    }
    let groups = (0..n)
        .map(|d| {
            let size = cx.indices(d).len();
            let prev = (d - 1).rem_euclid(n) as usize;
            let betti = size - ranks[d as usize] - ranks[prev];
            let torsion = factors[prev].iter().filter(|&&x| x > 1).map(|&x| x as i64).collect();
            AbelianGroup { betti, torsion }.normalized()
        })
        .collect();
    Ok(Homology { modulus: n, groups })
}

/// C ⊗ D with generators (a, b) in row-major order and
/// ∂(a ⊗ b) = ∂a ⊗ b + (−1)^{|a|} a ⊗ ∂b.
pub fn tensor_complex(c: &GradedChainComplex, d: &GradedChainComplex) -> Result<GradedChainComplex> {
    if c.modulus != d.modulus {
        return Err(Error::ModulusMismatch(c.modulus, d.modulus));
    }
    let (m, k) = (c.len(), d.len());
    let degrees = (0..m * k).map(|i| c.degrees[i / k] + d.degrees[i % k]).collect();
    let diff = DMatrix::from_fn(m * k, m * k, |t, s| {
        let (ta, tb) = (t / k, t % k);
        let (sa, sb) = (s / k, s % k);
        let mut v = 0;
        if tb == sb {
            v += c.differential[(ta, sa)];
        }
        if ta == sa {
            let sign = if c.degrees[sa] % 2 == 0 { 1 } else { -1 };
            v += sign * d.differential[(tb, sb)];
        }
        v
    });
    GradedChainComplex::new(degrees, diff, c.modulus)
}

/// H(C ⊗ D) predicted from H(C) and H(D):
/// H^n = ⊕_{p+q=n} H^p ⊗ H^q ⊕ ⊕_{p+q=n+1} Tor(H^p, H^q).
pub fn kunneth_prediction(hc: &Homology, hd: &Homology) -> Result<Homology> {
    if hc.modulus != hd.modulus {
        return Err(Error::ModulusMismatch(hc.modulus, hd.modulus));
    }
    let n = hc.modulus;
    let mut groups = vec![AbelianGroup::free(0); n as usize];
    for p in 0..n {
        for q in 0..n {
            let (a, b) = (&hc.groups[p as usize], &hd.groups[q as usize]);
            let t = ((p + q) % n) as usize;
            groups[t] = groups[t].direct_sum(&a.tensor(b));
            let u = ((p + q - 1).rem_euclid(n)) as usize;
            groups[u] = groups[u].direct_sum(&a.tor(b));
        }
    }
    Ok(Homology { modulus: n, groups })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexJson {
    pub degrees: Vec<i64>,
    /// Rows of the differential.
    pub differential: Vec<Vec<i64>>,
    #[serde(rename = "N")]
    pub modulus: i64,
}

impl ComplexJson {
    pub fn from_complex(cx: &GradedChainComplex) -> Self {
        let d = &cx.differential;
        ComplexJson {
            degrees: cx.degrees.clone(),
            differential: (0..d.nrows()).map(|i| d.row(i).iter().copied().collect()).collect(),
            modulus: cx.modulus,
        }
    }

    pub fn to_complex(&self) -> Result<GradedChainComplex> {
        let g = self.degrees.len();
        if self.differential.len() != g || self.differential.iter().any(|r| r.len() != g) {
            return Err(Error::DimensionMismatch(format!("differential must be {g}x{g}")));
        }
        GradedChainComplex::new(self.degrees.clone(), DMatrix::from_fn(g, g, |i, j| self.differential[i][j]), self.modulus)
    }
}
