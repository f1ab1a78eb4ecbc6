//! Truncated reduced density matrices and natural orbitals.
//!
//! For kept orbitals `0..m` the truncated 1-RDM is
//! `γ⁽ᵐ⁾[k, l] = N Σ_{i₂…i_N < m} c[k, i₂…] c[l, i₂…]` and the truncated 2-RDM
//! `Γ⁽ᵐ⁾ = N(N−1) Σ_{i₃…i_N < m} c[p, q, i₃…] c[r, s, i₃…]`. In determinant
//! storage both reduce to sums over spectator sets `J` inside the kept space:
//! `γ⁽ᵐ⁾[k, l] = Σ_J σ(k, J) σ(l, J) d_{J∪k} d_{J∪l}`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::combinatorics::{bit, indices, insertion_sign, subsets};
use crate::linalg::sorted_symmetric_eigen;
use crate::tensor::{check_partition, CiTensor};
use crate::{Error, Result};

/// Truncated 1-RDM on the full M×M basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedRdm1 {
    pub kept: usize,
    pub particles: usize,
    pub matrix: DMatrix<f64>,
}

impl TruncatedRdm1 {
    /// `𝒩 = (1/N) Σ_{k < m} γ⁽ᵐ⁾[k, k]`, the trace over the kept block.
    pub fn retained_norm(&self) -> f64 {
        (0..self.kept).map(|k| self.matrix[(k, k)]).sum::<f64>() / self.particles as f64
    }

    /// Largest `|γ⁽ᵐ⁾[k, l]|` over the kept/removed cross block.
    pub fn cross_block_max(&self) -> f64 {
        let m = self.kept;
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for k in 0..m {
            for l in m..n {
                worst = worst.max(self.matrix[(k, l)].abs());
            }
        }
        worst
    }
}

/// Truncated 2-RDM, stored densely as `M⁴` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedRdm2 {
    pub kept: usize,
    orbitals: usize,
    data: Vec<f64>,
}

impl TruncatedRdm2 {
    /// `N(N−1) Σ c[p, q, I] c[r, s, I]` over kept spectators `I`.
    #[inline]
    pub fn pair(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let m = self.orbitals;
        self.data[((p * m + q) * m + r) * m + s]
    }

    /// Index order `Γ_{klba} = N(N−1) Σ c[k, l, I] c[a, b, I]`.
    #[inline]
    pub fn element(&self, k: usize, l: usize, b: usize, a: usize) -> f64 {
        self.pair(k, l, a, b)
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }
}

pub fn truncated_rdm1(t: &CiTensor, kept: usize) -> Result<TruncatedRdm1> {
    check_partition(t.orbitals(), t.particles(), kept)?;
    let m = t.orbitals();
    let mut gamma = DMatrix::zeros(m, m);
    let mut v = vec![0.0; m];
    let mut support = Vec::with_capacity(m);
    for spectators in subsets(kept, t.particles() - 1) {
        support.clear();
        for (p, slot) in v.iter_mut().enumerate() {
            if spectators & bit(p) != 0 {
                continue;
            }
            let d = t.coeff(spectators | bit(p));
            if d != 0.0 {
                *slot = insertion_sign(spectators, p) * d;
                support.push(p);
            }
        }
        for &k in &support {
            for &l in &support {
                gamma[(k, l)] += v[k] * v[l];
            }
        }
    }
    Ok(TruncatedRdm1 { kept, particles: t.particles(), matrix: gamma })
}

pub fn truncated_rdm2(t: &CiTensor, kept: usize) -> Result<TruncatedRdm2> {
    if t.particles() < 2 {
        return Err(Error::TooFewParticles { needed: 2, got: t.particles() });
    }
    check_partition(t.orbitals(), t.particles(), kept)?;
    let m = t.orbitals();
    let mut data = vec![0.0; m * m * m * m];
    let mut support: Vec<(usize, f64)> = Vec::with_capacity(m * m);
    for spectators in subsets(kept, t.particles() - 2) {
        support.clear();
        for q in 0..m {
            if spectators & bit(q) != 0 {
                continue;
            }
            let with_q = spectators | bit(q);
            let sq = insertion_sign(spectators, q);
            for p in 0..m {
                if with_q & bit(p) != 0 {
                    continue;
                }
                let d = t.coeff(with_q | bit(p));
                if d != 0.0 {
                    support.push((p * m + q, insertion_sign(with_q, p) * sq * d));
                }
            }
        }
        for &(pq, x) in &support {
            let row = &mut data[pq * m * m..(pq + 1) * m * m];
            for &(rs, y) in &support {
                row[rs] += x * y;
            }
        }
    }
    Ok(TruncatedRdm2 { kept, orbitals: m, data })
}

/// Natural orbitals: eigenvectors of the 1-RDM, occupations descending.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalBasis {
    pub occupations: Vec<f64>,
    /// Columns are natural orbitals in the current basis.
    pub orbitals: DMatrix<f64>,
}

pub fn natural_basis(gamma: &TruncatedRdm1) -> NaturalBasis {
    let (occupations, orbitals) = sorted_symmetric_eigen(&gamma.matrix);
    NaturalBasis { occupations, orbitals }
}

/// `S_cor = −(1/N) Σ n_k ln n_k` with `0 ln 0 = 0`; `N` is the occupation sum
/// rounded to the nearest integer.
pub fn correlation_entropy(occupations: &[f64]) -> Result<f64> {
    const SLACK: f64 = 1e-10;
    let mut sum = 0.0;
    let mut acc = 0.0;
    for &n in occupations {
        if !(-SLACK..=1.0 + SLACK).contains(&n) {
            return Err(Error::OutOfUnitRange(n));
        }
        let n = n.clamp(0.0, 1.0);
        sum += n;
        if n > 0.0 {
            acc += n * libm::log(n);
        }
    }
    let particles = libm::round(sum);
    if particles < 1.0 {
        return Err(Error::TooFewParticles { needed: 1, got: 0 });
    }
    Ok((-acc / particles).max(0.0))
}

/// Norm contributions of determinants grouped by their overlap with a set of
/// orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetContributions {
    /// The 1-based orbitals of the analyzed set.
    pub set: Vec<usize>,
    /// Indexed by a bitmask over positions in `set`.
    pub values: Vec<f64>,
}

impl SubsetContributions {
    /// Contribution of determinants whose intersection with the set is
    /// exactly `subset` (1-based orbitals).
    pub fn get(&self, subset: &[usize]) -> Option<f64> {
        let mut mask = 0usize;
        for o in subset {
            mask |= 1 << self.set.iter().position(|s| s == o)?;
        }
        Some(self.values[mask])
    }

    /// `(subset, value)` pairs, subsets as 1-based orbital lists.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.values.iter().enumerate().map(move |(mask, v)| {
            let members = indices(mask as u64).into_iter().map(|i| self.set[i]).collect();
            (members, *v)
        })
    }
}

pub fn subset_contributions(t: &CiTensor, set: &[usize]) -> Result<SubsetContributions> {
    let mut positions = Vec::with_capacity(set.len());
    for &o in set {
        if o == 0 || o > t.orbitals() {
            return Err(Error::IndexOutOfRange { index: o, orbitals: t.orbitals() });
        }
        if positions.contains(&(o - 1)) {
            return Err(Error::RepeatedIndex(set.to_vec()));
        }
        positions.push(o - 1);
    }
    if set.len() > 20 {
        return Err(Error::TooManyOrbitals { orbitals: set.len(), max: 20 });
    }
    let mut values = vec![0.0; 1 << set.len()];
    for (mask, d) in subsets(t.orbitals(), t.particles()).zip(t.coeffs()) {
        let key = positions
            .iter()
            .enumerate()
            .filter(|(_, &p)| mask & bit(p) != 0)
            .fold(0usize, |acc, (i, _)| acc | (1 << i));
        values[key] += d * d;
    }
    Ok(SubsetContributions { set: set.to_vec(), values })
}

/// Full 1-RDM (`m = M`).
pub fn full_rdm1(t: &CiTensor) -> TruncatedRdm1 {
    truncated_rdm1(t, t.orbitals()).expect("m = M is always a valid partition")
}
