//! Random-ensemble comparison of the two initial guesses.
//!
//! Every sample is an independent work unit: its tensor comes from the
//! sub-seed of `(master_seed, sample_id)`, and both guesses are refined by
//! the trust-region Newton method at every requested `m`. Aggregation walks
//! the records in order, so results never depend on how samples were
//! scheduled.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::guess::{highest_no_guess, one_by_one_sequence};
use crate::optimizer::{newton_trust_region, NewtonOptions, Status, DEFINITENESS_TOL};
use crate::rdm::{correlation_entropy, full_rdm1, natural_basis, subset_contributions, SubsetContributions};
use crate::rotation::{reduced_norm, rotate_tensor, OrthogonalMatrix};
use crate::tensor::{CiTensor, Seed};
use crate::{Error, Result};

/// Initial-guess scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GuessMethod {
    /// Highest occupied natural orbitals.
    NaturalOrbitals,
    /// One-by-one elimination of the least occupied natural orbital.
    OneByOne,
    /// The input basis.
    Identity,
}

impl GuessMethod {
    /// The two schemes compared in an ensemble run, in record order.
    pub const COMPARED: [GuessMethod; 2] = [GuessMethod::NaturalOrbitals, GuessMethod::OneByOne];

    pub fn as_str(&self) -> &'static str {
        match self {
            GuessMethod::NaturalOrbitals => "no",
            GuessMethod::OneByOne => "one-by-one",
            GuessMethod::Identity => "identity",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "no" => Some(GuessMethod::NaturalOrbitals),
            "one-by-one" => Some(GuessMethod::OneByOne),
            "identity" => Some(GuessMethod::Identity),
            _ => None,
        }
    }

    /// Starting rotation for `m` kept orbitals.
    pub fn initial_rotation(&self, t: &CiTensor, kept: usize) -> Result<OrthogonalMatrix> {
        match self {
            GuessMethod::NaturalOrbitals => highest_no_guess(t, kept),
            GuessMethod::OneByOne => crate::guess::one_by_one_elimination(t, kept),
            GuessMethod::Identity => Ok(OrthogonalMatrix::identity(t.orbitals())),
        }
    }
}

impl core::fmt::Display for GuessMethod {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub orbitals: usize,
    pub particles: usize,
    /// Kept-orbital counts, each in `N..M`.
    pub kept_list: Vec<usize>,
    pub samples: usize,
    pub master_seed: u64,
    pub newton: NewtonOptions,
    /// Relative gap for counting one guess as significantly better.
    pub significance: f64,
}

impl ExperimentConfig {
    /// Desk-scale defaults: every `m` from `N` to `M − 1`.
    pub fn new(orbitals: usize, particles: usize, samples: usize, master_seed: u64) -> Self {
        Self {
            orbitals,
            particles,
            kept_list: (particles..orbitals).collect(),
            samples,
            master_seed,
            newton: NewtonOptions::default(),
            significance: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.particles == 0 || self.particles > self.orbitals {
            return bad(format!("need 1 <= N <= M, got N={} M={}", self.particles, self.orbitals));
        }
        if self.samples == 0 {
            return bad("at least one sample is required".into());
        }
        if self.kept_list.is_empty() {
            return bad("kept-orbital list is empty".into());
        }
        for &m in &self.kept_list {
            if m < self.particles || m >= self.orbitals {
                return bad(format!("kept count {m} must satisfy N <= m < M"));
            }
        }
        let mut sorted = self.kept_list.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.kept_list.len() {
            return bad("kept-orbital list has repeats".into());
        }
        if self.significance.is_nan() || self.significance < 0.0 {
            return bad("significance threshold must be nonnegative".into());
        }
        Ok(())
    }

    pub fn seed(&self, sample_id: usize) -> Seed {
        Seed::new(self.master_seed, sample_id as u64)
    }
}

/// One optimization of one sample from one guess.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample_id: usize,
    pub kept: usize,
    pub method: GuessMethod,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub iterations: usize,
    pub status: Status,
    pub grad_norm: f64,
    /// Most-positive Hessian eigenvalue at the final point.
    pub hessian_max_eig: f64,
    /// Correlation entropy of the sample.
    pub entropy: f64,
}

/// Runs one randomly generated sample.
pub fn run_sample(cfg: &ExperimentConfig, sample_id: usize) -> Result<Vec<SampleRecord>> {
    let t = CiTensor::random(cfg.orbitals, cfg.particles, cfg.seed(sample_id))?;
    run_sample_tensor(cfg, sample_id, &t)
}

/// Runs both guesses followed by Newton refinement for every `m` of the
/// configuration on a given tensor. Records are ordered by `m` as listed,
/// then by method.
pub fn run_sample_tensor(cfg: &ExperimentConfig, sample_id: usize, t: &CiTensor) -> Result<Vec<SampleRecord>> {
    cfg.validate()?;
    if t.orbitals() != cfg.orbitals || t.particles() != cfg.particles {
        return Err(Error::InvalidConfig(format!(
            "tensor shape M={} N={} does not match configuration",
            t.orbitals(),
            t.particles()
        )));
    }
    let natural = natural_basis(&full_rdm1(t));
    let entropy = correlation_entropy(&natural.occupations)?;
    let no_rotation = OrthogonalMatrix::from_basis(natural.orbitals)?;
    let min_kept = *cfg.kept_list.iter().min().expect("validated");
    let eliminations = one_by_one_sequence(t, min_kept)?;

    let mut out = Vec::with_capacity(cfg.kept_list.len() * 2);
    for &m in &cfg.kept_list {
        let obo =
            &eliminations.iter().find(|(kept, _)| *kept == m).expect("sequence covers every m above the minimum").1;
        for method in GuessMethod::COMPARED {
            let start = match method {
                GuessMethod::NaturalOrbitals => &no_rotation,
                _ => obo,
            };
            let initial_norm = reduced_norm(t, start, m)?;
            let report = newton_trust_region(t, m, start, &cfg.newton)?;
            out.push(SampleRecord {
                sample_id,
                kept: m,
                method,
                initial_norm,
                final_norm: report.norm,
                iterations: report.iterations,
                status: report.status,
                grad_norm: report.grad_norm,
                hessian_max_eig: report.hessian_max_eig.unwrap_or(f64::NEG_INFINITY),
                entropy,
            });
        }
    }
    Ok(out)
}

/// `true` when `a` beats `b` by more than `threshold · max(a, b)`.
pub fn significantly_better(a: f64, b: f64, threshold: f64) -> bool {
    a - b > threshold * a.max(b)
}

/// Counts `(first wins, second wins)` over paired final values.
pub fn significance_counts(pairs: &[(f64, f64)], threshold: f64) -> (usize, usize) {
    pairs.iter().fold((0, 0), |(a, b), &(x, y)| {
        (a + significantly_better(x, y, threshold) as usize, b + significantly_better(y, x, threshold) as usize)
    })
}

/// Per-`m`, per-method summary.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub kept: usize,
    pub method: GuessMethod,
    pub initial_min: f64,
    pub initial_mean: f64,
    pub initial_max: f64,
    pub final_min: f64,
    pub final_mean: f64,
    pub final_max: f64,
    /// Samples where this method ended significantly above the other one.
    pub sig_better_count: usize,
    /// Final Hessians with an eigenvalue above [`DEFINITENESS_TOL`].
    pub nondefinite_count: usize,
}

/// Aggregates records; rows sorted by `m` ascending, then method.
pub fn aggregate(records: &[SampleRecord], threshold: f64) -> Result<Vec<AggregateRow>> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut kept_values: Vec<usize> = records.iter().map(|r| r.kept).collect();
    kept_values.sort_unstable();
    kept_values.dedup();
    let mut rows = Vec::new();
    for &m in &kept_values {
        for method in GuessMethod::COMPARED {
            let other = match method {
                GuessMethod::NaturalOrbitals => GuessMethod::OneByOne,
                _ => GuessMethod::NaturalOrbitals,
            };
            let mine: Vec<&SampleRecord> = records.iter().filter(|r| r.kept == m && r.method == method).collect();
            if mine.is_empty() {
                continue;
            }
            let (initial_min, initial_mean, initial_max) = min_mean_max(mine.iter().map(|r| r.initial_norm));
            let (final_min, final_mean, final_max) = min_mean_max(mine.iter().map(|r| r.final_norm));
            let sig_better_count = mine
                .iter()
                .filter(|r| {
                    records
                        .iter()
                        .find(|o| o.sample_id == r.sample_id && o.kept == m && o.method == other)
                        .is_some_and(|o| significantly_better(r.final_norm, o.final_norm, threshold))
                })
                .count();
            let nondefinite_count = mine.iter().filter(|r| r.hessian_max_eig >= DEFINITENESS_TOL).count();
            rows.push(AggregateRow {
                kept: m,
                method,
                initial_min,
                initial_mean,
                initial_max,
                final_min,
                final_mean,
                final_max,
                sig_better_count,
                nondefinite_count,
            });
        }
    }
    Ok(rows)
}

fn min_mean_max(values: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
        count += 1;
    }
    (min, sum / count as f64, max)
}

/// Difference between the two guesses for one sample, positive when the
/// one-by-one elimination is ahead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRow {
    pub sample_id: usize,
    pub entropy: f64,
    pub initial_diff: f64,
    pub final_diff: f64,
}

/// One row per sample at kept count `m`.
pub fn entropy_scatter(records: &[SampleRecord], kept: usize) -> Vec<EntropyRow> {
    let mut rows = Vec::new();
    for r in records.iter().filter(|r| r.kept == kept && r.method == GuessMethod::NaturalOrbitals) {
        if let Some(o) =
            records.iter().find(|o| o.sample_id == r.sample_id && o.kept == kept && o.method == GuessMethod::OneByOne)
        {
            rows.push(EntropyRow {
                sample_id: r.sample_id,
                entropy: r.entropy,
                initial_diff: o.initial_norm - r.initial_norm,
                final_diff: o.final_norm - r.final_norm,
            });
        }
    }
    rows
}

/// Composition of the hardest sample for the natural-orbital guess.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseReport {
    pub sample_id: usize,
    pub kept: usize,
    pub final_norm: f64,
    /// Natural occupations, descending.
    pub occupations: Vec<f64>,
    /// Determinant weights over the most occupied natural orbitals.
    pub contributions: SubsetContributions,
}

/// Picks the natural-orbital-guess record with the smallest final 𝒩 at the
/// smallest `m` present and analyzes its tensor in the natural-orbital basis.
pub fn worst_case_report<F>(records: &[SampleRecord], mut tensor_for: F, top_set: usize) -> Result<WorstCaseReport>
where
    F: FnMut(usize) -> Result<CiTensor>,
{
    let kept = records.iter().map(|r| r.kept).min().ok_or(Error::EmptyRecords)?;
    let worst = records
        .iter()
        .filter(|r| r.kept == kept && r.method == GuessMethod::NaturalOrbitals)
        .fold(None::<&SampleRecord>, |best, r| match best {
            Some(b) if b.final_norm <= r.final_norm => Some(b),
            _ => Some(r),
        })
        .ok_or(Error::EmptyRecords)?;
    let t = tensor_for(worst.sample_id)?;
    let natural = natural_basis(&full_rdm1(&t));
    let rotated = rotate_tensor(&t, &OrthogonalMatrix::from_basis(natural.orbitals)?)?;
    let top: Vec<usize> = (1..=top_set.min(t.orbitals())).collect();
    Ok(WorstCaseReport {
        sample_id: worst.sample_id,
        kept,
        final_norm: worst.final_norm,
        occupations: natural.occupations,
        contributions: subset_contributions(&rotated, &top)?,
    })
}
