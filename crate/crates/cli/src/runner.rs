//! Parallel ensemble execution and tensor persistence.
//!
//! Samples are independent; each derives its tensor from its own sub-seed,
//! and results are collected in `sample_id` order, so the output does not
//! depend on the number of workers.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::Context;
use rayon::prelude::*;
use redbasis_core::experiment::{aggregate, run_sample_tensor, AggregateRow, ExperimentConfig, SampleRecord};
use redbasis_core::CiTensor;

use crate::cifile;

/// Records and aggregates of one ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<SampleRecord>,
    pub aggregate: Vec<AggregateRow>,
}

/// File holding the tensor of one sample inside a tensor directory.
pub fn tensor_path(dir: &Path, sample_id: usize) -> PathBuf {
    dir.join(format!("sample_{sample_id:06}.json"))
}

pub fn load_tensor(dir: &Path, sample_id: usize) -> anyhow::Result<CiTensor> {
    let path = tensor_path(dir, sample_id);
    Ok(cifile::read(&path).with_context(|| format!("loading tensor of sample {sample_id}"))?.tensor)
}

/// Runs every sample of `cfg` on `workers` threads; tensors are written to
/// `tensor_dir` when given.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize, tensor_dir: Option<&Path>) -> anyhow::Result<RunOutput> {
    cfg.validate()?;
    if let Some(dir) = tensor_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let done = AtomicUsize::new(0);
    let per_sample: Vec<Vec<SampleRecord>> = pool.install(|| {
        (0..cfg.samples)
            .into_par_iter()
            .map(|id| -> anyhow::Result<Vec<SampleRecord>> {
                let t = CiTensor::random(cfg.orbitals, cfg.particles, cfg.seed(id))?;
                if let Some(dir) = tensor_dir {
                    cifile::write(&tensor_path(dir, id), &t)?;
                }
                let records = run_sample_tensor(cfg, id, &t).with_context(|| format!("sample {id}"))?;
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                log::debug!("finished sample {id} ({n}/{})", cfg.samples);
                Ok(records)
            })
            .collect::<anyhow::Result<_>>()
    })?;
    let records: Vec<SampleRecord> = per_sample.into_iter().flatten().collect();
    let aggregate = aggregate(&records, cfg.significance)?;
    Ok(RunOutput { records, aggregate })
}
