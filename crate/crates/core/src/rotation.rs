//! Orthogonal orbital rotations and the retained norm 𝒩.
//!
//! Rotating a tensor by `U` maps determinant coefficients as
//! `d'_L = Σ_K d_K det U[K, L]` (rows `K`, columns `L`). All the N×N minors
//! are shared through a Laplace expansion along the last column: the minors
//! of size `n` for column set `C` are built from those of size `n − 1` for
//! `C` without its largest element, and the final level is contracted with
//! the coefficients on the fly instead of being stored.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::combinatorics::{binomial, bit, colex_rank, subsets};
use crate::linalg::{antisymmetry_defect, orthogonality_defect};
use crate::tensor::{check_partition, CiTensor};
use crate::{Error, Result};

const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Cross-block rotation generators `X[k, l] = −X[l, k]`, `k < m ≤ l` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct RotationParams {
    orbitals: usize,
    kept: usize,
    values: Vec<f64>,
}

impl RotationParams {
    pub fn zeros(orbitals: usize, kept: usize) -> Self {
        Self { orbitals, kept, values: vec![0.0; kept * (orbitals - kept)] }
    }

    pub fn from_values(orbitals: usize, kept: usize, values: Vec<f64>) -> Result<Self> {
        let expected = kept * orbitals.saturating_sub(kept);
        if kept > orbitals || values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        Ok(Self { orbitals, kept, values })
    }

    /// Number of free parameters, `m(M − m)`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Position of the generator pairing kept `k` with removed `l`.
    #[inline]
    pub fn index(orbitals: usize, kept: usize, k: usize, l: usize) -> usize {
        k * (orbitals - kept) + (l - kept)
    }

    /// `(k, l)` pairs in parameter order.
    pub fn pairs(orbitals: usize, kept: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..kept).flat_map(move |k| (kept..orbitals).map(move |l| (k, l)))
    }

    /// The full antisymmetric M×M generator.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.orbitals, self.orbitals);
        for ((k, l), v) in Self::pairs(self.orbitals, self.kept).zip(&self.values) {
            x[(k, l)] = *v;
            x[(l, k)] = -*v;
        }
        x
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }
}

/// Real orthogonal matrix with determinant +1.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix(DMatrix<f64>);

impl OrthogonalMatrix {
    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Validates orthogonality and a positive determinant.
    pub fn new(u: DMatrix<f64>) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::DimensionMismatch { expected: u.nrows(), got: u.ncols() });
        }
        let defect = orthogonality_defect(&u);
        if defect > ORTHOGONALITY_TOL || u.determinant() < 0.0 {
            return Err(Error::NotOrthogonal(defect));
        }
        Ok(Self(u))
    }

    /// Accepts any orthonormal basis, flipping the last column if needed to
    /// reach determinant +1.
    pub fn from_basis(mut u: DMatrix<f64>) -> Result<Self> {
        if u.is_square() && u.ncols() > 0 && u.determinant() < 0.0 {
            let last = u.ncols() - 1;
            u.column_mut(last).neg_mut();
        }
        Self::new(u)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `self · other`: rotating by the product equals rotating by `self`
    /// and then by `other`.
    pub fn compose(&self, other: &OrthogonalMatrix) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn defect(&self) -> f64 {
        orthogonality_defect(&self.0)
    }
}

/// `U = exp(X)` for antisymmetric `X`.
///
/// Scaling and squaring with a degree-18 Taylor polynomial on
/// `‖X/2ˢ‖₁ ≤ 1/2`, followed by one Newton–Schulz polar correction.
pub fn exp_antisymmetric(x: &DMatrix<f64>) -> Result<OrthogonalMatrix> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: x.ncols() });
    }
    let defect = antisymmetry_defect(x);
    if defect > 1e-12 {
        return Err(Error::NotAntisymmetric(defect));
    }
    if x.nrows() == 0 {
        return Ok(OrthogonalMatrix::identity(0));
    }
    Ok(OrthogonalMatrix(expm(x)))
}

fn expm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let norm1 = (0..n).map(|j| x.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0f64, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm1 * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = x * scale;
    let identity = DMatrix::<f64>::identity(n, n);
    // Horner evaluation of Σ_{k≤18} A^k / k!
    let mut result = identity.clone();
    for k in (1..=18).rev() {
        result = &identity + (&a * &result) / k as f64;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    let gram = result.transpose() * &result;
    &result * (identity * 3.0 - gram) * 0.5
}

/// Rotated coefficients `d'_L = Σ_K d_K det U[K, L]`, returned as a tensor.
pub fn rotate_tensor(t: &CiTensor, u: &OrthogonalMatrix) -> Result<CiTensor> {
    if u.dim() != t.orbitals() {
        return Err(Error::DimensionMismatch { expected: t.orbitals(), got: u.dim() });
    }
    let coeffs = rotated_coeffs(t, u.matrix(), t.orbitals());
    Ok(CiTensor::from_raw(t.orbitals(), t.particles(), coeffs))
}

/// `𝒩 = Σ_{L ⊆ first m orbitals} d'_L²` after rotating by `U`.
pub fn reduced_norm(t: &CiTensor, u: &OrthogonalMatrix, kept: usize) -> Result<f64> {
    if u.dim() != t.orbitals() {
        return Err(Error::DimensionMismatch { expected: t.orbitals(), got: u.dim() });
    }
    check_partition(t.orbitals(), t.particles(), kept)?;
    Ok(rotated_coeffs(t, u.matrix(), kept).iter().map(|d| d * d).sum())
}

/// Rotated coefficients restricted to column sets inside `0..col_limit`, in
/// colex order (which is the prefix of the full colex order).
pub(crate) fn rotated_coeffs(t: &CiTensor, u: &DMatrix<f64>, col_limit: usize) -> Vec<f64> {
    let orbitals = t.orbitals();
    let particles = t.particles();
    let top = particles - 1;

    // minors[n][rank(R) * C(col_limit, n) + rank(C)] = det U[R, C]
    let mut minors: Vec<f64> = vec![1.0];
    for n in 1..=top {
        let ncols_prev = binomial(col_limit, n - 1);
        let ncols = binomial(col_limit, n);
        let nrows = binomial(orbitals, n);
        let mut next = vec![0.0; nrows * ncols];
        let rows: Vec<u64> = subsets(orbitals, n).collect();
        for (cr, cmask) in subsets(col_limit, n).enumerate() {
            let c_top = 63 - cmask.leading_zeros() as usize;
            let prev_col = colex_rank(cmask & !bit(c_top));
            for (rr, &rmask) in rows.iter().enumerate() {
                let mut acc = 0.0;
                let mut sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                // iterate rows ascending; sign (-1)^{#rows above r}
                let mut rest = rmask;
                while rest != 0 {
                    let r = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    let sub = colex_rank(rmask & !bit(r));
                    acc += sign * u[(r, c_top)] * minors[sub * ncols_prev + prev_col];
                    sign = -sign;
                }
                next[rr * ncols + cr] = acc;
            }
        }
        minors = next;
    }

    // contract the last level with the coefficients
    let ncols_top = binomial(col_limit, top);
    let mut partners: Vec<Vec<(usize, f64)>> = Vec::with_capacity(binomial(orbitals, top));
    for rmask in subsets(orbitals, top) {
        let mut list = Vec::new();
        for r in 0..orbitals {
            if rmask & bit(r) != 0 {
                continue;
            }
            let d = t.coeff(rmask | bit(r));
            if d != 0.0 {
                let above = (rmask >> r).count_ones();
                let sign = if above % 2 == 0 { 1.0 } else { -1.0 };
                list.push((r, sign * d));
            }
        }
        partners.push(list);
    }

    let mut out = vec![0.0; binomial(col_limit, particles)];
    let mut w = vec![0.0; orbitals];
    for (cr, cmask) in subsets(col_limit, top).enumerate() {
        let first_new = if cmask == 0 { 0 } else { 64 - cmask.leading_zeros() as usize };
        if first_new >= col_limit {
            continue;
        }
        w.iter_mut().for_each(|v| *v = 0.0);
        for (rr, list) in partners.iter().enumerate() {
            let minor = minors[rr * ncols_top + cr];
            if minor == 0.0 {
                continue;
            }
            for &(r, v) in list {
                w[r] += v * minor;
            }
        }
        for c in first_new..col_limit {
            let mut acc = 0.0;
            for (r, wr) in w.iter().enumerate() {
                acc += u[(r, c)] * wr;
            }
            out[colex_rank(cmask | bit(c))] = acc;
        }
    }
    out
}
