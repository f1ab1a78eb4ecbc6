#![allow(dead_code)]

use nalgebra::DMatrix;
use redbasis_core::{CiTensor, OrthogonalMatrix, Seed};
use redbasis_oracle as oracle;

/// Tensor from the ratio recipe.
pub fn ratio_tensor(orbitals: usize, particles: usize, master: u64, index: u64) -> CiTensor {
    CiTensor::random(orbitals, particles, Seed::new(master, index)).unwrap()
}

/// Tensor with uniform coefficients, drawn independently of the library.
pub fn uniform_tensor(orbitals: usize, particles: usize, seed: u64) -> CiTensor {
    oracle::random_tensor(orbitals, particles, &mut oracle::rng(seed))
}

pub fn random_rotation(n: usize, seed: u64) -> OrthogonalMatrix {
    OrthogonalMatrix::new(oracle::random_orthogonal(n, &mut oracle::rng(seed))).unwrap()
}

pub fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn coeff_diff(a: &CiTensor, b: &CiTensor) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
