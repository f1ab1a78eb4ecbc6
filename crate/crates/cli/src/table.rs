//! CSV tables: per-sample records, per-`m` aggregates and entropy scatter.
//!
//! Floats carry 17 significant digits, so a parsed table reproduces the
//! values it was written from bit for bit.

use std::io::{Read, Write};

use redbasis_core::experiment::{AggregateRow, EntropyRow, GuessMethod, SampleRecord};
use redbasis_core::Status;

use crate::fmt_f64;

pub const RECORD_COLUMNS: [&str; 10] = [
    "sample_id",
    "m",
    "method",
    "n_initial",
    "n_final",
    "iterations",
    "status",
    "grad_norm_final",
    "hessian_max_eig",
    "entropy",
];

pub const AGGREGATE_COLUMNS: [&str; 10] = [
    "m",
    "method",
    "n_init_min",
    "n_init_mean",
    "n_init_max",
    "n_final_min",
    "n_final_mean",
    "n_final_max",
    "sig_better_count",
    "nondefinite_count",
];

pub const SCATTER_COLUMNS: [&str; 4] = ["sample_id", "entropy", "initial_diff", "final_diff"];

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {found:?}, expected {expected:?}")]
    Header { found: Vec<String>, expected: Vec<String> },
    #[error("line {line}: bad value {value:?} in column {column}")]
    Value { line: u64, column: &'static str, value: String },
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>, TableError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

pub fn write_records<W: Write>(out: W, records: &[SampleRecord]) -> Result<(), TableError> {
    let mut w = writer(out, &RECORD_COLUMNS)?;
    for r in records {
        w.write_record([
            r.sample_id.to_string(),
            r.kept.to_string(),
            r.method.as_str().to_string(),
            fmt_f64(r.initial_norm),
            fmt_f64(r.final_norm),
            r.iterations.to_string(),
            r.status.as_str().to_string(),
            fmt_f64(r.grad_norm),
            fmt_f64(r.hessian_max_eig),
            fmt_f64(r.entropy),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_aggregate<W: Write>(out: W, rows: &[AggregateRow]) -> Result<(), TableError> {
    let mut w = writer(out, &AGGREGATE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.kept.to_string(),
            r.method.as_str().to_string(),
            fmt_f64(r.initial_min),
            fmt_f64(r.initial_mean),
            fmt_f64(r.initial_max),
            fmt_f64(r.final_min),
            fmt_f64(r.final_mean),
            fmt_f64(r.final_max),
            r.sig_better_count.to_string(),
            r.nondefinite_count.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_scatter<W: Write>(out: W, rows: &[EntropyRow]) -> Result<(), TableError> {
    let mut w = writer(out, &SCATTER_COLUMNS)?;
    for r in rows {
        w.write_record([r.sample_id.to_string(), fmt_f64(r.entropy), fmt_f64(r.initial_diff), fmt_f64(r.final_diff)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn field<T>(rec: &csv::StringRecord, idx: usize, parse: impl FnOnce(&str) -> Option<T>) -> Result<T, TableError> {
    let value = rec.get(idx).unwrap_or_default();
    parse(value).ok_or_else(|| TableError::Value {
        line: rec.position().map_or(0, |p| p.line()),
        column: RECORD_COLUMNS[idx],
        value: value.to_string(),
    })
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<SampleRecord>, TableError> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != RECORD_COLUMNS {
        return Err(TableError::Header { found: header, expected: RECORD_COLUMNS.map(String::from).to_vec() });
    }
    let float = |s: &str| s.parse::<f64>().ok();
    let int = |s: &str| s.parse::<usize>().ok();
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(SampleRecord {
                sample_id: field(&rec, 0, int)?,
                kept: field(&rec, 1, int)?,
                method: field(&rec, 2, GuessMethod::parse)?,
                initial_norm: field(&rec, 3, float)?,
                final_norm: field(&rec, 4, float)?,
                iterations: field(&rec, 5, int)?,
                status: field(&rec, 6, Status::parse)?,
                grad_norm: field(&rec, 7, float)?,
                hessian_max_eig: field(&rec, 8, float)?,
                entropy: field(&rec, 9, float)?,
            })
        })
        .collect()
}
