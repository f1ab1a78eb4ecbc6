//! Antisymmetric CI coefficient tensors.
//!
//! A [`CiTensor`] stores one coefficient `d_K` per determinant (strictly
//! increasing orbital tuple `K`), normalized so that `Σ_K d_K² = 1`. The
//! implied full tensor is `c[i₁…i_N] = sign(π) d_{sort(i)} / √(N!)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::combinatorics::{self, binomial, bit, colex_rank, low_mask, MAX_ORBITALS};
use crate::{Error, Result};

/// Largest determinant space a tensor may span.
pub const MAX_DETERMINANTS: usize = 1 << 26;

/// Antisymmetric N-particle coefficient tensor over M orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct CiTensor {
    orbitals: usize,
    particles: usize,
    /// Coefficients in colex order of the determinant bitmask.
    coeffs: Vec<f64>,
}

impl CiTensor {
    /// Builds a normalized tensor from 1-based strictly increasing tuples.
    pub fn make(orbitals: usize, particles: usize, entries: &[(Vec<usize>, f64)]) -> Result<Self> {
        check_shape(orbitals, particles)?;
        let mut coeffs = vec![0.0; binomial(orbitals, particles)];
        let mut seen = vec![false; coeffs.len()];
        for (tuple, value) in entries {
            let mask = tuple_mask(orbitals, particles, tuple)?;
            if !value.is_finite() {
                return Err(Error::NonFinite(tuple.clone()));
            }
            let r = colex_rank(mask);
            if seen[r] {
                return Err(Error::DuplicateTuple(tuple.clone()));
            }
            seen[r] = true;
            coeffs[r] = *value;
        }
        Self::from_coeffs(orbitals, particles, coeffs)
    }

    /// Builds a normalized tensor from coefficients already in colex order.
    pub fn from_coeffs(orbitals: usize, particles: usize, mut coeffs: Vec<f64>) -> Result<Self> {
        check_shape(orbitals, particles)?;
        if coeffs.len() != binomial(orbitals, particles) {
            return Err(Error::DimensionMismatch { expected: binomial(orbitals, particles), got: coeffs.len() });
        }
        let norm = libm::sqrt(coeffs.iter().map(|d| d * d).sum::<f64>());
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        if !norm.is_finite() {
            return Err(Error::NonFinite(Vec::new()));
        }
        for d in &mut coeffs {
            *d /= norm;
        }
        Ok(Self { orbitals, particles, coeffs })
    }

    /// Wraps coefficients without renormalizing (rotations preserve the norm).
    pub(crate) fn from_raw(orbitals: usize, particles: usize, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), binomial(orbitals, particles));
        Self { orbitals, particles, coeffs }
    }

    /// Single determinant on the given 1-based orbitals.
    pub fn determinant(orbitals: usize, occupied: &[usize]) -> Result<Self> {
        Self::make(orbitals, occupied.len(), &[(occupied.to_vec(), 1.0)])
    }

    /// Random tensor from the `(ran₁ − ran₂)/(ran₃ − ran₄)` recipe.
    ///
    /// Tuples are visited in lexicographic order and consume four uniform
    /// draws on `[0, 1)` each; a vanishing denominator redraws all four.
    pub fn random(orbitals: usize, particles: usize, seed: Seed) -> Result<Self> {
        check_shape(orbitals, particles)?;
        let mut rng = seed.rng();
        let mut coeffs = vec![0.0; binomial(orbitals, particles)];
        for tuple in combinatorics::lex_tuples(orbitals, particles) {
            let value = loop {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let r3: f64 = rng.random();
                let r4: f64 = rng.random();
                if r3 != r4 {
                    break (r1 - r2) / (r3 - r4);
                }
            };
            coeffs[colex_rank(combinatorics::mask_from_indices(&tuple))] = value;
        }
        Self::from_coeffs(orbitals, particles, coeffs)
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    /// Coefficients in colex order of the determinant mask.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of the determinant with 0-based occupation mask `mask`.
    #[inline]
    pub fn coeff(&self, mask: u64) -> f64 {
        self.coeffs[colex_rank(mask)]
    }

    /// Full-tensor element `c[idx]` for 1-based indices.
    pub fn element(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() != self.particles {
            return Err(Error::WrongArity { tuple: idx.to_vec(), got: idx.len(), expected: self.particles });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i == 0 || i > self.orbitals) {
            return Err(Error::IndexOutOfRange { index: bad, orbitals: self.orbitals });
        }
        let zero_based: Vec<usize> = idx.iter().map(|i| i - 1).collect();
        let mask = combinatorics::mask_from_indices(&zero_based);
        if mask.count_ones() as usize != self.particles {
            return Ok(0.0);
        }
        let sign = combinatorics::sort_sign(&zero_based);
        Ok(sign * self.coeff(mask) / libm::sqrt(factorial(self.particles)))
    }

    /// Nonzero entries as 1-based tuples, sorted lexicographically.
    pub fn entries(&self) -> Vec<(Vec<usize>, f64)> {
        combinatorics::lex_tuples(self.orbitals, self.particles)
            .filter_map(|t| {
                let d = self.coeff(combinatorics::mask_from_indices(&t));
                (d != 0.0).then(|| (t.iter().map(|i| i + 1).collect(), d))
            })
            .collect()
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|d| d * d).sum()
    }

    /// Number of determinants with a nonzero coefficient.
    pub fn nonzero_count(&self) -> usize {
        self.coeffs.iter().filter(|d| **d != 0.0).count()
    }

    /// Projects onto the determinants of the kept orbitals and renormalizes.
    ///
    /// Returns the tensor over `m` orbitals together with the retained norm
    /// `𝒩 = Σ_{K ⊆ kept} d_K²`. The reduced-basis coefficients are those of
    /// the target divided by `√𝒩`, i.e. `𝒩 = (1 − λ)²` for the normalization
    /// multiplier `λ`.
    pub fn truncate_and_renormalize(&self, partition: OrbitalPartition) -> Result<(CiTensor, f64)> {
        partition.check(self)?;
        let m = partition.kept();
        let kept: Vec<f64> = self.coeffs[..binomial(m, self.particles)].to_vec();
        let retained: f64 = kept.iter().map(|d| d * d).sum();
        if retained == 0.0 {
            return Err(Error::EmptyTruncation { kept: m });
        }
        let reduced = CiTensor::from_coeffs(m, self.particles, kept)?;
        Ok((reduced, retained))
    }
}

/// `‖Ψ − Φ‖² = 2 − 2√𝒩` for the optimal reduced-basis approximation.
pub fn distance_from_norm(norm: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&norm) {
        return Err(Error::OutOfUnitRange(norm));
    }
    Ok(2.0 - 2.0 * libm::sqrt(norm.clamp(0.0, 1.0)))
}

/// Split of the basis into the first `m` kept orbitals and the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrbitalPartition {
    kept: usize,
}

impl OrbitalPartition {
    pub fn new(kept: usize) -> Self {
        Self { kept }
    }

    /// Validated partition for a given tensor.
    pub fn for_tensor(t: &CiTensor, kept: usize) -> Result<Self> {
        let p = Self { kept };
        p.check(t)?;
        Ok(p)
    }

    pub fn kept(&self) -> usize {
        self.kept
    }

    pub fn kept_mask(&self) -> u64 {
        low_mask(self.kept)
    }

    pub fn check(&self, t: &CiTensor) -> Result<()> {
        check_partition(t.orbitals, t.particles, self.kept)
    }
}

pub(crate) fn check_partition(orbitals: usize, particles: usize, kept: usize) -> Result<()> {
    if kept < particles || kept > orbitals {
        return Err(Error::InvalidPartition { kept, particles, orbitals });
    }
    Ok(())
}

/// Deterministic seed for one sample of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    pub master_seed: u64,
    pub sample_index: u64,
}

impl Seed {
    pub fn new(master_seed: u64, sample_index: u64) -> Self {
        Self { master_seed, sample_index }
    }

    /// SplitMix64 finalizer applied to the master seed and the sample index.
    pub fn sub_seed(&self) -> u64 {
        splitmix64(self.master_seed ^ splitmix64(self.sample_index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
    }

    /// ChaCha20 stream seeded from [`Seed::sub_seed`].
    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.sub_seed())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn check_shape(orbitals: usize, particles: usize) -> Result<()> {
    if orbitals > MAX_ORBITALS {
        return Err(Error::TooManyOrbitals { orbitals, max: MAX_ORBITALS });
    }
    if particles == 0 || particles > orbitals {
        return Err(Error::InvalidShape { orbitals, particles });
    }
    if binomial(orbitals, particles) > MAX_DETERMINANTS {
        return Err(Error::TooManyOrbitals { orbitals, max: MAX_ORBITALS });
    }
    Ok(())
}

fn tuple_mask(orbitals: usize, particles: usize, tuple: &[usize]) -> Result<u64> {
    if tuple.len() != particles {
        return Err(Error::WrongArity { tuple: tuple.to_vec(), got: tuple.len(), expected: particles });
    }
    let mut mask = 0u64;
    for (pos, &i) in tuple.iter().enumerate() {
        if i == 0 || i > orbitals {
            return Err(Error::IndexOutOfRange { index: i, orbitals });
        }
        if pos > 0 {
            let prev = tuple[pos - 1];
            if i == prev || mask & bit(i - 1) != 0 {
                return Err(Error::RepeatedIndex(tuple.to_vec()));
            }
            if i < prev {
                return Err(Error::UnorderedTuple(tuple.to_vec()));
            }
        }
        mask |= bit(i - 1);
    }
    Ok(mask)
}
