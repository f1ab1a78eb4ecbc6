//! Derivatives of the retained norm and its maximization.
//!
//! Parameters are the cross-block generators `x_(k,l)`, `k < m ≤ l`, of
//! `U = exp(X)` with `X[k, l] = x`, `X[l, k] = −x`. At `X = 0`:
//!
//! * `∂𝒩/∂x_(k,l) = −2 γ⁽ᵐ⁾[k, l]`
//! * `∂²𝒩/∂x_(k,l)∂x_(a,b) = 2(Γ_{kabl} + Γ_{kbal} + δ_ak γ⁽ᵐ⁾[l, b] − δ_bl γ⁽ᵐ⁾[k, a])`
//!
//! Both are always evaluated in a refreshed working basis: after every
//! accepted step the tensor is rotated and `X` is reset to zero.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::combinatorics::binomial;
use crate::guess::highest_no_guess;
use crate::linalg::{max_eigenvalue, sorted_symmetric_eigen};
use crate::rdm::{truncated_rdm1, truncated_rdm2, TruncatedRdm1};
use crate::rotation::{exp_antisymmetric, rotate_tensor, OrthogonalMatrix, RotationParams};
use crate::tensor::{check_partition, CiTensor};
use crate::{Error, Result};

/// `∂𝒩/∂x_(k,l) = GRADIENT_FACTOR · γ⁽ᵐ⁾[k, l]` in the column convention.
pub const GRADIENT_FACTOR: f64 = -2.0;

/// Most-positive Hessian eigenvalue still counted as negative semidefinite.
pub const DEFINITENESS_TOL: f64 = 1e-8;

/// Gradient over the cross-block parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub orbitals: usize,
    pub kept: usize,
    pub values: DVector<f64>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Entry for kept orbital `k` and removed orbital `l` (0-based).
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[RotationParams::index(self.orbitals, self.kept, k, l)]
    }
}

/// Hessian over the cross-block parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Hessian {
    pub orbitals: usize,
    pub kept: usize,
    pub matrix: DMatrix<f64>,
}

impl Hessian {
    /// Most-positive eigenvalue, `None` when there are no parameters.
    pub fn max_eigenvalue(&self) -> Option<f64> {
        max_eigenvalue(&self.matrix)
    }
}

/// Gradient of 𝒩 at `X = 0` for a tensor already in the working basis.
pub fn gradient(t: &CiTensor, kept: usize) -> Result<Gradient> {
    let gamma = truncated_rdm1(t, kept)?;
    Ok(gradient_from_rdm(&gamma))
}

fn gradient_from_rdm(gamma: &TruncatedRdm1) -> Gradient {
    let orbitals = gamma.matrix.nrows();
    let kept = gamma.kept;
    let values =
        RotationParams::pairs(orbitals, kept).map(|(k, l)| GRADIENT_FACTOR * gamma.matrix[(k, l)]).collect::<Vec<_>>();
    Gradient { orbitals, kept, values: DVector::from_vec(values) }
}

/// Hessian of 𝒩 at `X = 0`; falls back to central differences for `N = 1`.
pub fn hessian(t: &CiTensor, kept: usize) -> Result<Hessian> {
    let gamma = truncated_rdm1(t, kept)?;
    hessian_from_rdm(t, &gamma)
}

fn hessian_from_rdm(t: &CiTensor, gamma: &TruncatedRdm1) -> Result<Hessian> {
    let orbitals = t.orbitals();
    let kept = gamma.kept;
    if t.particles() < 2 {
        return finite_difference_hessian(t, kept, 1e-4);
    }
    let g2 = truncated_rdm2(t, kept)?;
    let pairs: Vec<(usize, usize)> = RotationParams::pairs(orbitals, kept).collect();
    let n = pairs.len();
    let mut h = DMatrix::zeros(n, n);
    for (i, &(k, l)) in pairs.iter().enumerate() {
        for (j, &(a, b)) in pairs.iter().enumerate().skip(i) {
            let mut v = g2.pair(k, a, l, b) + g2.pair(k, b, l, a);
            if a == k {
                v += gamma.matrix[(l, b)];
            }
            if b == l {
                v -= gamma.matrix[(k, a)];
            }
            h[(i, j)] = 2.0 * v;
            h[(j, i)] = 2.0 * v;
        }
    }
    Ok(Hessian { orbitals, kept, matrix: h })
}

fn finite_difference_hessian(t: &CiTensor, kept: usize, step: f64) -> Result<Hessian> {
    let orbitals = t.orbitals();
    let n = kept * (orbitals - kept);
    let eval = |v: &[f64]| -> Result<f64> {
        let x = RotationParams::from_values(orbitals, kept, v.to_vec())?.matrix();
        let u = exp_antisymmetric(&x)?;
        kept_norm(&rotate_tensor(t, &u)?, kept)
    };
    let mut h = DMatrix::zeros(n, n);
    let mut v = alloc::vec![0.0; n];
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                v.iter_mut().for_each(|x| *x = 0.0);
                v[i] += si * step;
                v[j] += sj * step;
                acc += w * eval(&v)?;
            }
            let value = acc / (4.0 * step * step);
            h[(i, j)] = value;
            h[(j, i)] = value;
        }
    }
    Ok(Hessian { orbitals, kept, matrix: h })
}

fn kept_norm(t: &CiTensor, kept: usize) -> Result<f64> {
    check_partition(t.orbitals(), t.particles(), kept)?;
    Ok(t.coeffs()[..binomial(kept, t.particles())].iter().map(|d| d * d).sum())
}

/// Termination state of an optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    MaxIter,
    OscillationDetected,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::OscillationDetected => "oscillation_detected",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "converged" => Some(Status::Converged),
            "max_iter" => Some(Status::MaxIter),
            "oscillation_detected" => Some(Status::OscillationDetected),
            _ => None,
        }
    }
}

impl core::fmt::Display for Status {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Trust-region Newton settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Gradient-norm convergence threshold (√ε).
    pub tol: f64,
    pub max_iter: usize,
    pub initial_radius: f64,
    pub max_radius: f64,
    /// Shrink the radius when the gain ratio falls below this.
    pub shrink_below: f64,
    /// Grow the radius when the gain ratio exceeds this and the step hit the boundary.
    pub grow_above: f64,
    pub shrink_factor: f64,
    pub grow_factor: f64,
    /// Steps with gain ratio above this are accepted.
    pub accept_ratio: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1.5e-8,
            max_iter: 200,
            initial_radius: 0.1,
            max_radius: 1.0,
            shrink_below: 0.25,
            grow_above: 0.75,
            shrink_factor: 0.25,
            grow_factor: 2.0,
            accept_ratio: 0.0,
        }
    }
}

/// One trial step (Newton) or one diagonalization sweep (fixed point).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 𝒩 at the start of the iteration.
    pub norm: f64,
    pub grad_norm: f64,
    pub radius: f64,
    pub step_norm: f64,
    pub predicted: f64,
    pub actual: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    pub kept: usize,
    /// Accumulated rotation from the input basis.
    pub rotation: OrthogonalMatrix,
    /// Input tensor expressed in the final basis.
    pub tensor: CiTensor,
    pub initial_norm: f64,
    pub norm: f64,
    pub iterations: usize,
    pub accepted_steps: usize,
    pub history: Vec<IterationRecord>,
    pub status: Status,
    pub grad_norm: f64,
    /// Most-positive Hessian eigenvalue at the final point.
    pub hessian_max_eig: Option<f64>,
}

/// Maximizes 𝒩 over cross-block rotations starting from `u0`.
pub fn newton_trust_region(
    t: &CiTensor,
    kept: usize,
    u0: &OrthogonalMatrix,
    opts: &NewtonOptions,
) -> Result<OptimizationReport> {
    check_partition(t.orbitals(), t.particles(), kept)?;
    if u0.dim() != t.orbitals() {
        return Err(Error::DimensionMismatch { expected: t.orbitals(), got: u0.dim() });
    }
    let defect = u0.defect();
    if defect > 1e-10 {
        return Err(Error::NotOrthogonal(defect));
    }
    let orbitals = t.orbitals();
    let mut work = rotate_tensor(t, u0)?;
    let mut rotation = u0.clone();
    let mut norm = kept_norm(&work, kept)?;
    let initial_norm = norm;
    let mut radius = opts.initial_radius;
    let mut history = Vec::new();
    let mut accepted_steps = 0;

    let mut gamma = truncated_rdm1(&work, kept)?;
    let mut grad = gradient_from_rdm(&gamma);
    let mut status = Status::MaxIter;
    for _ in 0..opts.max_iter {
        let grad_norm = grad.norm();
        if grad_norm < opts.tol {
            status = Status::Converged;
            break;
        }
        let hess = hessian_from_rdm(&work, &gamma)?;
        let (step, predicted) = trust_region_step(&grad.values, &hess.matrix, radius);
        let step_norm = step.norm();
        let x = RotationParams::from_values(orbitals, kept, step.iter().copied().collect())?.matrix();
        let step_u = exp_antisymmetric(&x)?;
        let trial = rotate_tensor(&work, &step_u)?;
        let trial_norm = kept_norm(&trial, kept)?;
        let actual = trial_norm - norm;

        let ratio = if predicted.abs() < 1e-15 {
            if actual >= -1e-15 {
                1.0
            } else {
                -1.0
            }
        } else {
            actual / predicted
        };
        let accepted = ratio > opts.accept_ratio && actual > -1e-12;
        history.push(IterationRecord { norm, grad_norm, radius, step_norm, predicted, actual, accepted });

        if ratio < opts.shrink_below {
            radius *= opts.shrink_factor;
        } else if ratio > opts.grow_above && step_norm >= 0.99 * radius {
            radius = (radius * opts.grow_factor).min(opts.max_radius);
        }

        if accepted {
            work = trial;
            rotation = rotation.compose(&step_u);
            norm = trial_norm;
            accepted_steps += 1;
            gamma = truncated_rdm1(&work, kept)?;
            grad = gradient_from_rdm(&gamma);
        }
    }
    let grad_norm = grad.norm();
    if status == Status::MaxIter && grad_norm < opts.tol {
        status = Status::Converged;
    }
    let hessian_max_eig = hessian_from_rdm(&work, &gamma)?.max_eigenvalue();
    Ok(OptimizationReport {
        kept,
        rotation,
        tensor: work,
        initial_norm,
        norm,
        iterations: history.len(),
        accepted_steps,
        history,
        status,
        grad_norm,
        hessian_max_eig,
    })
}

/// Maximizes the quadratic model `gᵀs + ½ sᵀHs` subject to `‖s‖ ≤ radius`.
///
/// Eigen-shift solution of the subproblem: `s(σ) = (σI − H)⁻¹ g` with
/// `σ ≥ max(0, λ_max(H))`, the shift found by bisection on `‖s(σ)‖ = radius`.
/// Returns the step and the predicted increase.
pub(crate) fn trust_region_step(g: &DVector<f64>, h: &DMatrix<f64>, radius: f64) -> (DVector<f64>, f64) {
    let n = g.len();
    // minimize fᵀs + ½ sᵀBs with B = −H, f = −g
    let b = -h;
    let eig = SymmetricEigen::new((&b + b.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lambdas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs: Vec<DVector<f64>> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    let f = -g;
    let coef: Vec<f64> = vecs.iter().map(|q| q.dot(&f)).collect();
    let fnorm = f.norm();
    let scale = lambdas.iter().fold(1e-300f64, |a, l| a.max(l.abs()));

    let step_at = |sigma: f64, skip_cluster: bool| -> DVector<f64> {
        let mut s = DVector::zeros(n);
        for i in 0..n {
            let denom = lambdas[i] + sigma;
            if skip_cluster && (lambdas[i] - lambdas[0]).abs() <= 1e-12 * scale {
                continue;
            }
            s -= &vecs[i] * (coef[i] / denom);
        }
        s
    };
    let predicted = |s: &DVector<f64>| g.dot(s) + 0.5 * s.dot(&(h * s));

    let lambda_min = lambdas[0];
    if lambda_min > 1e-14 * scale {
        let s = step_at(0.0, false);
        if s.norm() <= radius {
            let p = predicted(&s);
            return (s, p);
        }
    }

    let low = if lambda_min > 0.0 { 0.0 } else { -lambda_min };
    // hard case: gradient has no component along the lowest eigenvectors
    let cluster_weight: f64 =
        (0..n).filter(|&i| (lambdas[i] - lambda_min).abs() <= 1e-12 * scale).map(|i| coef[i] * coef[i]).sum::<f64>();
    let cluster_weight = libm::sqrt(cluster_weight);
    if lambda_min <= 0.0 && cluster_weight <= 1e-12 * fnorm.max(1e-300) {
        let mut s = step_at(low, true);
        let sn = s.norm();
        if sn <= radius {
            let tau = libm::sqrt((radius * radius - sn * sn).max(0.0));
            s += &vecs[0] * tau;
            let p = predicted(&s);
            return (s, p);
        }
    }

    let mut lo = low;
    let mut hi = low + fnorm / radius + lambda_min.abs() + 1.0;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if step_at(mid, false).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = step_at(hi, false);
    let p = predicted(&s);
    (s, p)
}

/// Fixed-point settings for the diagonalize-and-select iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Converged when `|Δ𝒩|` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of past 𝒩 values searched for a repeat.
    pub cycle_window: usize,
    /// Two 𝒩 values closer than this count as a repeat.
    pub cycle_tol: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200, cycle_window: 8, cycle_tol: 1e-12 }
    }
}

/// Repeatedly diagonalizes the full `γ⁽ᵐ⁾` and keeps its `m` most occupied
/// eigenvectors, starting from the natural orbitals.
///
/// A value repeating one seen two or more sweeps earlier (within
/// `cycle_tol`) while consecutive values still differ by more than `tol` is
/// reported as [`Status::OscillationDetected`].
pub fn naive_fixed_point(t: &CiTensor, kept: usize, opts: &FixedPointOptions) -> Result<OptimizationReport> {
    check_partition(t.orbitals(), t.particles(), kept)?;
    let start = highest_no_guess(t, kept)?;
    let mut work = rotate_tensor(t, &start)?;
    let mut rotation = start;
    let mut norm = kept_norm(&work, kept)?;
    let initial_norm = norm;
    let mut window: Vec<f64> = Vec::with_capacity(opts.cycle_window);
    let mut history = Vec::new();
    let mut status = Status::MaxIter;
    for _ in 0..opts.max_iter {
        let gamma = truncated_rdm1(&work, kept)?;
        let grad_norm = gradient_from_rdm(&gamma).norm();
        let (_, vectors) = sorted_symmetric_eigen(&gamma.matrix);
        let step = OrthogonalMatrix::from_basis(vectors)?;
        let next = rotate_tensor(&work, &step)?;
        let next_norm = kept_norm(&next, kept)?;
        let change = next_norm - norm;
        history.push(IterationRecord {
            norm,
            grad_norm,
            radius: 0.0,
            step_norm: 0.0,
            predicted: 0.0,
            actual: change,
            accepted: true,
        });
        work = next;
        rotation = rotation.compose(&step);
        if window.len() == opts.cycle_window {
            window.remove(0);
        }
        window.push(norm);
        norm = next_norm;
        if change.abs() < opts.tol {
            status = Status::Converged;
            break;
        }
        let lagged = &window[..window.len().saturating_sub(1)];
        if lagged.iter().any(|v| (v - next_norm).abs() < opts.cycle_tol) {
            status = Status::OscillationDetected;
            break;
        }
    }
    let gamma = truncated_rdm1(&work, kept)?;
    let grad_norm = gradient_from_rdm(&gamma).norm();
    let hessian_max_eig = hessian_from_rdm(&work, &gamma)?.max_eigenvalue();
    Ok(OptimizationReport {
        kept,
        rotation,
        tensor: work,
        initial_norm,
        norm,
        iterations: history.len(),
        accepted_steps: history.len(),
        history,
        status,
        grad_norm,
        hessian_max_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn t5() -> CiTensor {
        CiTensor::make(3, 2, &[(vec![1, 2], 0.8), (vec![2, 3], 0.6)]).unwrap()
    }

    fn t3() -> CiTensor {
        let h = 0.5f64.sqrt();
        CiTensor::make(4, 2, &[(vec![1, 2], h), (vec![3, 4], h)]).unwrap()
    }

    #[test]
    fn t3_is_stationary() {
        let g = gradient(&t3(), 2).unwrap();
        assert_eq!(g.values.len(), 4);
        assert_eq!(g.max_abs(), 0.0);
        let rep = newton_trust_region(&t3(), 2, &OrthogonalMatrix::identity(4), &NewtonOptions::default()).unwrap();
        assert_eq!(rep.accepted_steps, 0);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.status, Status::Converged);
        assert_abs_diff_eq!(rep.norm, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn t5_gradient_points_along_13() {
        let g = gradient(&t5(), 2).unwrap();
        assert_abs_diff_eq!(g.get(0, 2), 0.96, epsilon = 1e-15);
        assert_eq!(g.get(1, 2), 0.0);
    }

    #[test]
    fn t5_newton_reaches_one() {
        let rep = newton_trust_region(&t5(), 2, &OrthogonalMatrix::identity(3), &NewtonOptions::default()).unwrap();
        assert_eq!(rep.status, Status::Converged);
        assert_abs_diff_eq!(rep.norm, 1.0, epsilon = 1e-12);
        assert!(rep.grad_norm < 1.5e-8);
        for w in rep.history.windows(2) {
            assert!(w[1].norm >= w[0].norm - 1e-12);
        }
    }

    #[test]
    fn single_determinant_is_already_optimal() {
        let t = CiTensor::make(5, 2, &[(vec![1, 2], 1.0)]).unwrap();
        let rep = newton_trust_region(&t, 2, &OrthogonalMatrix::identity(5), &NewtonOptions::default()).unwrap();
        assert_abs_diff_eq!(rep.norm, 1.0, epsilon = 1e-12);
        assert_eq!(rep.status, Status::Converged);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn excluded_determinant_is_a_stationary_minimum() {
        let t = CiTensor::make(5, 2, &[(vec![2, 4], 1.0)]).unwrap();
        let rep = newton_trust_region(&t, 2, &OrthogonalMatrix::identity(5), &NewtonOptions::default()).unwrap();
        assert_eq!(rep.norm, 0.0);
        assert_eq!(rep.status, Status::Converged);
        assert!(rep.hessian_max_eig.unwrap() > DEFINITENESS_TOL);
    }

    #[test]
    fn hessian_dimension() {
        let t = CiTensor::random(20, 2, crate::Seed::new(1, 0)).unwrap();
        let h = hessian(&t, 10).unwrap();
        assert_eq!(h.matrix.shape(), (100, 100));
    }

    #[test]
    fn newton_rejects_wrong_dimension() {
        let r = newton_trust_region(&t5(), 2, &OrthogonalMatrix::identity(4), &NewtonOptions::default());
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn subproblem_interior_newton_step() {
        let g = DVector::from_vec(vec![0.1, -0.2]);
        let h = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -4.0]);
        let (s, p) = trust_region_step(&g, &h, 1.0);
        assert_abs_diff_eq!(s[0], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], -0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(p, 0.5 * (0.1 * 0.05 + 0.2 * 0.05), epsilon = 1e-15);
    }

    #[test]
    fn subproblem_boundary_and_hard_case() {
        // positive curvature: the step must sit on the boundary
        let g = DVector::from_vec(vec![1.0, 0.0]);
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let (s, p) = trust_region_step(&g, &h, 0.5);
        assert_abs_diff_eq!(s.norm(), 0.5, epsilon = 1e-12);
        assert!(s[0] > 0.0 && p > 0.0);
        // zero gradient at a saddle: move along the ascent direction
        let g = DVector::from_vec(vec![0.0, 0.0]);
        let (s, p) = trust_region_step(&g, &h, 0.3);
        assert_abs_diff_eq!(s.norm(), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(s[0].abs(), 0.3, epsilon = 1e-12);
        assert!(p > 0.0);
    }

    #[test]
    fn fixed_point_on_simple_cases() {
        let rep = naive_fixed_point(&t5(), 2, &FixedPointOptions::default()).unwrap();
        assert_eq!(rep.status, Status::Converged);
        assert_abs_diff_eq!(rep.norm, 1.0, epsilon = 1e-12);
        let single = CiTensor::make(4, 2, &[(vec![1, 3], 1.0)]).unwrap();
        let rep = naive_fixed_point(&single, 2, &FixedPointOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.status, Status::Converged);
        assert_abs_diff_eq!(rep.norm, 1.0, epsilon = 1e-12);
    }
}
