//! Reduced-basis full-CI orbital optimization.
//!
//! Given an antisymmetric N-particle coefficient tensor over M orbitals, find
//! the m-orbital subspace (and the orthogonal rotation producing it) that
//! retains the largest possible norm 𝒩 of the wave function. The distance
//! between the target and its best reduced-basis full-CI approximation is
//! then `2 - 2√𝒩`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the ensemble
//! driver and the command line live in the `redbasis` companion crate.
//!
//! Orbital indices are 1-based in the public tuple API ([`CiTensor::make`],
//! [`CiTensor::element`]) and 0-based everywhere matrices are involved.
//! Rotations follow the column convention: new orbital `i` is
//! `Σ_j U[j, i] φ_j`, so the first `m` columns of `U` span the kept space.

#![no_std]

extern crate alloc;

pub mod combinatorics;
pub mod experiment;
pub mod guess;
pub mod linalg;
pub mod optimizer;
pub mod rdm;
pub mod rotation;
pub mod tensor;

pub use experiment::{AggregateRow, EntropyRow, ExperimentConfig, GuessMethod, SampleRecord, WorstCaseReport};
pub use guess::{
    highest_no_guess, one_by_one_elimination, one_by_one_sequence, two_particle_optimal,
    verify_single_removal_optimality, SingleRemovalReport,
};
pub use optimizer::{
    gradient, hessian, naive_fixed_point, newton_trust_region, FixedPointOptions, Gradient, Hessian, IterationRecord,
    NewtonOptions, OptimizationReport, Status,
};
pub use rdm::{
    correlation_entropy, natural_basis, subset_contributions, truncated_rdm1, truncated_rdm2, NaturalBasis,
    SubsetContributions, TruncatedRdm1, TruncatedRdm2,
};
pub use rotation::{exp_antisymmetric, reduced_norm, rotate_tensor, OrthogonalMatrix, RotationParams};
pub use tensor::{distance_from_norm, CiTensor, OrbitalPartition, Seed};

use thiserror::Error;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("number of particles {particles} must be between 1 and the number of orbitals {orbitals}")]
    InvalidShape { orbitals: usize, particles: usize },
    #[error("at most {max} orbitals are supported, got {orbitals}")]
    TooManyOrbitals { orbitals: usize, max: usize },
    #[error("tuple {tuple:?} has {got} indices, expected {expected}")]
    WrongArity { tuple: alloc::vec::Vec<usize>, got: usize, expected: usize },
    #[error("orbital index {index} is outside 1..={orbitals}")]
    IndexOutOfRange { index: usize, orbitals: usize },
    #[error("tuple {0:?} repeats an orbital index")]
    RepeatedIndex(alloc::vec::Vec<usize>),
    #[error("tuple {0:?} is not strictly increasing")]
    UnorderedTuple(alloc::vec::Vec<usize>),
    #[error("tuple {0:?} appears more than once")]
    DuplicateTuple(alloc::vec::Vec<usize>),
    #[error("coefficient for tuple {0:?} is not finite")]
    NonFinite(alloc::vec::Vec<usize>),
    #[error("all coefficients are zero")]
    ZeroNorm,
    #[error("kept orbital count {kept} must lie between {particles} and {orbitals}")]
    InvalidPartition { kept: usize, particles: usize, orbitals: usize },
    #[error("no determinant survives the truncation to {kept} orbitals")]
    EmptyTruncation { kept: usize },
    #[error("value {0} lies outside [0, 1]")]
    OutOfUnitRange(f64),
    #[error("matrix is not antisymmetric (defect {0:e})")]
    NotAntisymmetric(f64),
    #[error("matrix is not orthogonal (defect {0:e})")]
    NotOrthogonal(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation needs at least {needed} particles, tensor has {got}")]
    TooFewParticles { needed: usize, got: usize },
    #[error("operation needs exactly two particles, tensor has {0}")]
    NotTwoParticles(usize),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(alloc::string::String),
    #[error("no records to analyze")]
    EmptyRecords,
}

pub type Result<T> = core::result::Result<T, Error>;
