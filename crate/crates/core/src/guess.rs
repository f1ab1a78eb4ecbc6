//! Initial orbitals for the reduced-basis optimization.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::linalg::sorted_symmetric_eigen;
use crate::optimizer::{gradient, newton_trust_region, NewtonOptions, Status};
use crate::rdm::{full_rdm1, natural_basis, truncated_rdm1};
use crate::rotation::{reduced_norm, rotate_tensor, OrthogonalMatrix};
use crate::tensor::{check_partition, CiTensor};
use crate::{Error, Result};

/// Natural orbitals of the full 1-RDM, most occupied first.
///
/// The rotation does not depend on `m`; the first `m` columns are the kept
/// orbitals.
pub fn highest_no_guess(t: &CiTensor, kept: usize) -> Result<OrthogonalMatrix> {
    check_partition(t.orbitals(), t.particles(), kept)?;
    OrthogonalMatrix::from_basis(natural_basis(&full_rdm1(t)).orbitals)
}

/// Rotations produced by removing the least occupied natural orbital of the
/// retained space one orbital at a time.
///
/// Entry `j` holds `(i, U)` where `U` keeps the first `i` orbitals, for
/// `i = M − 1` down to `min_kept`. Step `i → i − 1` diagonalizes the 1-RDM of
/// the projection onto the current `i` orbitals (contraction and matrix
/// indices both restricted) and drops its lowest eigenvector.
pub fn one_by_one_sequence(t: &CiTensor, min_kept: usize) -> Result<Vec<(usize, OrthogonalMatrix)>> {
    check_partition(t.orbitals(), t.particles(), min_kept)?;
    let orbitals = t.orbitals();
    let mut work = t.clone();
    let mut total = OrthogonalMatrix::identity(orbitals);
    let mut out = Vec::with_capacity(orbitals - min_kept);
    for retained in (min_kept + 1..=orbitals).rev() {
        let gamma = truncated_rdm1(&work, retained)?;
        let block = gamma.matrix.view((0, 0), (retained, retained)).into_owned();
        let (_, vectors) = sorted_symmetric_eigen(&block);
        let sub = OrthogonalMatrix::from_basis(vectors)?;
        let mut step = DMatrix::identity(orbitals, orbitals);
        step.view_mut((0, 0), (retained, retained)).copy_from(sub.matrix());
        let step = OrthogonalMatrix::new(step)?;
        work = rotate_tensor(&work, &step)?;
        total = total.compose(&step);
        out.push((retained - 1, total.clone()));
    }
    Ok(out)
}

/// One-by-one elimination down to `m` kept orbitals.
pub fn one_by_one_elimination(t: &CiTensor, kept: usize) -> Result<OrthogonalMatrix> {
    check_partition(t.orbitals(), t.particles(), kept)?;
    if kept == t.orbitals() {
        return Ok(OrthogonalMatrix::identity(kept));
    }
    let mut seq = one_by_one_sequence(t, kept)?;
    Ok(seq.pop().expect("at least one elimination step").1)
}

/// Optimal orbitals for two particles.
///
/// The real antisymmetric coefficient matrix is brought to its canonical
/// 2×2-block form `[[0, ξ], [−ξ, 0]]`, blocks ordered by decreasing `ξ`; in
/// this natural-orbital basis every truncated 1-RDM is diagonal. Returns the
/// rotation and the retained norm, which equals `Σ ξ_j²` over the blocks that
/// fit entirely inside the first `m` orbitals.
pub fn two_particle_optimal(t: &CiTensor, kept: usize) -> Result<(OrthogonalMatrix, f64)> {
    if t.particles() != 2 {
        return Err(Error::NotTwoParticles(t.particles()));
    }
    check_partition(t.orbitals(), 2, kept)?;
    let n = t.orbitals();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = t.coeff((1 << i) | (1 << j));
            c[(i, j)] = d;
            c[(j, i)] = -d;
        }
    }
    let gram = c.transpose() * &c;
    let scale = gram.amax().max(1e-300);
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n);
    while basis.len() + 1 < n {
        let projector = complement_projector(n, &basis);
        let (values, vectors) = sorted_symmetric_eigen(&(&projector * &gram * &projector));
        if values[0] <= 1e-14 * scale {
            break;
        }
        let u = orthonormalize(vectors.column(0).into_owned(), &basis);
        basis.push(u);
        // tiny blocks amplify rounding in C·u; restore orthogonality
        let v = orthonormalize(&c * &basis[basis.len() - 1], &basis);
        basis.push(v);
    }
    // null space of the coefficient matrix
    let projector = complement_projector(n, &basis);
    let (values, vectors) = sorted_symmetric_eigen(&projector);
    for (j, value) in values.iter().enumerate() {
        if basis.len() == n {
            break;
        }
        if *value > 0.5 {
            basis.push(vectors.column(j).into_owned());
        }
    }
    let u = OrthogonalMatrix::from_basis(DMatrix::from_columns(&basis))?;
    let norm = reduced_norm(t, &u, kept)?;
    Ok((u, norm))
}

/// Two Gram–Schmidt passes against `basis`, then normalization.
fn orthonormalize(mut v: nalgebra::DVector<f64>, basis: &[nalgebra::DVector<f64>]) -> nalgebra::DVector<f64> {
    for _ in 0..2 {
        for b in basis {
            let overlap = b.dot(&v);
            v.axpy(-overlap, b, 1.0);
        }
    }
    let norm = v.norm();
    v / norm
}

fn complement_projector(n: usize, basis: &[nalgebra::DVector<f64>]) -> DMatrix<f64> {
    let mut p = DMatrix::identity(n, n);
    for b in basis {
        p -= b * b.transpose();
    }
    p
}

/// Check that dropping the least occupied natural orbital is stationary.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleRemovalReport {
    /// `max_a |γ⁽ᴹ⁻¹⁾[M, a]|`, `a < M`, in the natural-orbital basis.
    pub cross_max: f64,
    /// Largest gradient entry at that basis.
    pub gradient_max: f64,
    /// Retained norm with the lowest natural orbital removed.
    pub norm: f64,
    pub newton_accepted_steps: usize,
    pub newton_status: Status,
}

pub fn verify_single_removal_optimality(t: &CiTensor) -> Result<SingleRemovalReport> {
    if t.particles() < 2 {
        return Err(Error::TooFewParticles { needed: 2, got: t.particles() });
    }
    let kept = t.orbitals() - 1;
    let u = highest_no_guess(t, kept)?;
    let rotated = rotate_tensor(t, &u)?;
    let cross_max = truncated_rdm1(&rotated, kept)?.cross_block_max();
    let gradient_max = gradient(&rotated, kept)?.max_abs();
    let newton = newton_trust_region(t, kept, &u, &NewtonOptions::default())?;
    Ok(SingleRemovalReport {
        cross_max,
        gradient_max,
        norm: newton.initial_norm,
        newton_accepted_steps: newton.accepted_steps,
        newton_status: newton.status,
    })
}
