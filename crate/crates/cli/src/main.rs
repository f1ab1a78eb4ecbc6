use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use redbasis::{cifile, fmt_f64, runner, table};
use redbasis_core::experiment::{
    aggregate, entropy_scatter, worst_case_report, ExperimentConfig, GuessMethod, SampleRecord,
};
use redbasis_core::rdm::{correlation_entropy, full_rdm1, natural_basis};
use redbasis_core::{newton_trust_region, reduced_norm, CiTensor, NewtonOptions, Seed};

#[derive(Parser)]
#[command(name = "redbasis", version, about = "Optimal reduced orbital bases for CI wave functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random CI file.
    Gen {
        #[arg(long)]
        orbitals: usize,
        #[arg(long)]
        particles: usize,
        #[arg(long)]
        seed: u64,
        /// Sample index; index `i` reproduces sample `i` of `sample --seed S`.
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize the kept orbitals of one wave function.
    Optimize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        keep: usize,
        #[arg(long, value_enum, default_value_t = GuessArg::Both)]
        guess: GuessArg,
        #[arg(long, default_value_t = NewtonOptions::default().tol)]
        tol: f64,
        #[arg(long, default_value_t = NewtonOptions::default().max_iter)]
        max_iter: usize,
        /// Write the results in records.csv format.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare both initial guesses on an ensemble of random wave functions.
    Sample {
        #[arg(long)]
        orbitals: usize,
        #[arg(long)]
        particles: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Kept-orbital counts; defaults to every m from N to M − 1.
        #[arg(long, value_delimiter = ',')]
        keep_list: Option<Vec<usize>>,
        /// Store every sample's tensor for later worst-case analysis.
        #[arg(long)]
        keep_tensors: bool,
        /// Tensor directory; defaults to `tensors/` next to the records file.
        #[arg(long)]
        tensor_dir: Option<PathBuf>,
        #[arg(long)]
        out_records: PathBuf,
        #[arg(long)]
        out_aggregate: PathBuf,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value_t = NewtonOptions::default().tol)]
        tol: f64,
        #[arg(long, default_value_t = NewtonOptions::default().max_iter)]
        max_iter: usize,
        /// Relative gap counted as a significantly better result.
        #[arg(long, default_value_t = 1e-6)]
        significance: f64,
    },
    /// Post-process a records file.
    Analyze {
        #[arg(long)]
        records: PathBuf,
        /// Report the hardest sample for the natural-orbital guess.
        #[arg(long)]
        worst_case: bool,
        #[arg(long, default_value_t = 4)]
        top_set: usize,
        /// Tensor directory; defaults to `tensors/` next to the records file.
        #[arg(long)]
        tensor_dir: Option<PathBuf>,
        /// Write entropy-versus-difference rows to this CSV.
        #[arg(long)]
        scatter: Option<PathBuf>,
        /// Kept count for the scatter table; defaults to the smallest present.
        #[arg(long)]
        scatter_m: Option<usize>,
        /// Recompute the aggregate table into this CSV.
        #[arg(long)]
        aggregate: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        significance: f64,
    },
    /// Print natural occupations and the correlation entropy.
    Entropy {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GuessArg {
    No,
    OneByOne,
    Identity,
    Both,
}

impl GuessArg {
    fn methods(self) -> Vec<GuessMethod> {
        match self {
            GuessArg::No => vec![GuessMethod::NaturalOrbitals],
            GuessArg::OneByOne => vec![GuessMethod::OneByOne],
            GuessArg::Identity => vec![GuessMethod::Identity],
            GuessArg::Both => GuessMethod::COMPARED.to_vec(),
        }
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Gen { orbitals, particles, seed, index, out } => {
            let t = CiTensor::random(orbitals, particles, Seed::new(seed, index))?;
            cifile::write(&out, &t)?;
        }
        Command::Optimize { input, keep, guess, tol, max_iter, report } => {
            let t = cifile::read(&input)?.tensor;
            let opts = NewtonOptions { tol, max_iter, ..NewtonOptions::default() };
            optimize(&t, keep, &guess.methods(), &opts, report.as_deref())?;
        }
        Command::Sample {
            orbitals,
            particles,
            samples,
            seed,
            keep_list,
            keep_tensors,
            tensor_dir,
            out_records,
            out_aggregate,
            workers,
            tol,
            max_iter,
            significance,
        } => {
            let mut cfg = ExperimentConfig::new(orbitals, particles, samples, seed);
            if let Some(list) = keep_list {
                cfg.kept_list = list;
            }
            cfg.newton.tol = tol;
            cfg.newton.max_iter = max_iter;
            cfg.significance = significance;
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let dir = keep_tensors.then(|| tensor_dir.unwrap_or_else(|| default_tensor_dir(&out_records)));
            let out = runner::run_experiment(&cfg, workers, dir.as_deref())?;
            table::write_records(create(&out_records)?, &out.records)?;
            table::write_aggregate(create(&out_aggregate)?, &out.aggregate)?;
        }
        Command::Analyze {
            records,
            worst_case,
            top_set,
            tensor_dir,
            scatter,
            scatter_m,
            aggregate: agg,
            significance,
        } => {
            let file = File::open(&records).with_context(|| format!("opening {}", records.display()))?;
            let rows = table::read_records(BufReader::new(file))?;
            if rows.is_empty() {
                bail!("{} holds no records", records.display());
            }
            if let Some(path) = agg {
                table::write_aggregate(create(&path)?, &aggregate(&rows, significance)?)?;
            }
            if let Some(path) = scatter {
                let m = scatter_m.unwrap_or_else(|| rows.iter().map(|r| r.kept).min().unwrap_or(0));
                table::write_scatter(create(&path)?, &entropy_scatter(&rows, m))?;
            }
            if worst_case {
                let dir = tensor_dir.unwrap_or_else(|| default_tensor_dir(&records));
                print_worst_case(&rows, &dir, top_set)?;
            }
        }
        Command::Entropy { input } => {
            let t = cifile::read(&input)?.tensor;
            let occupations = natural_basis(&full_rdm1(&t)).occupations;
            print_occupations(&occupations);
            println!("S_cor {}", fmt_f64(correlation_entropy(&occupations)?));
        }
    }
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn default_tensor_dir(records: &Path) -> PathBuf {
    records.parent().unwrap_or(Path::new(".")).join("tensors")
}

fn optimize(
    t: &CiTensor,
    kept: usize,
    methods: &[GuessMethod],
    opts: &NewtonOptions,
    report: Option<&Path>,
) -> anyhow::Result<()> {
    let entropy = correlation_entropy(&natural_basis(&full_rdm1(t)).occupations)?;
    let mut records = Vec::new();
    for &method in methods {
        let start = method.initial_rotation(t, kept)?;
        let initial_norm = reduced_norm(t, &start, kept)?;
        let rep = newton_trust_region(t, kept, &start, opts)?;
        let record = SampleRecord {
            sample_id: 0,
            kept,
            method,
            initial_norm,
            final_norm: rep.norm,
            iterations: rep.iterations,
            status: rep.status,
            grad_norm: rep.grad_norm,
            hessian_max_eig: rep.hessian_max_eig.unwrap_or(f64::NEG_INFINITY),
            entropy,
        };
        println!(
            "method={} n_initial={} n_final={} iterations={} status={} grad_norm={} hessian_max_eig={}",
            method,
            fmt_f64(record.initial_norm),
            fmt_f64(record.final_norm),
            record.iterations,
            record.status,
            fmt_f64(record.grad_norm),
            fmt_f64(record.hessian_max_eig),
        );
        records.push(record);
    }
    if let Some(path) = report {
        table::write_records(create(path)?, &records)?;
    }
    Ok(())
}

fn print_occupations(occupations: &[f64]) {
    println!("k n_k");
    for (k, n) in occupations.iter().enumerate() {
        println!("{} {}", k + 1, fmt_f64(*n));
    }
}

fn print_worst_case(records: &[SampleRecord], dir: &Path, top_set: usize) -> anyhow::Result<()> {
    let report = worst_case_report(
        records,
        |id| {
            runner::load_tensor(dir, id).map_err(|e| {
                log::error!("{e:#}");
                redbasis_core::Error::InvalidConfig(format!("tensor of sample {id} unavailable in {}", dir.display()))
            })
        },
        top_set,
    )?;
    println!("sample {} m {} n_final {}", report.sample_id, report.kept, fmt_f64(report.final_norm));
    print_occupations(&report.occupations);
    println!("S_cor {}", fmt_f64(correlation_entropy(&report.occupations)?));
    println!("orbitals contribution");
    let mut parts: Vec<(Vec<usize>, f64)> = report.contributions.iter().collect();
    parts.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    for (subset, value) in parts {
        let label = if subset.is_empty() {
            "0".to_string()
        } else {
            subset.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
        };
        println!("{label} {}", fmt_f64(value));
    }
    Ok(())
}
