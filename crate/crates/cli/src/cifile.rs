//! JSON CI-coefficient files.
//!
//! ```json
//! {"format_version": 1, "num_orbitals": 3, "num_particles": 2,
//!  "coefficients": [{"orbitals": [1, 2], "value": 8.0000000000000004e-1}]}
//! ```
//!
//! Omitted determinants are zero. Writers emit tuples in lexicographic
//! order with 17 significant digits.

use std::fs;
use std::path::Path;

use redbasis_core::CiTensor;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

pub const FORMAT_VERSION: u32 = 1;

/// Allowed drift of `Σ d²` from one before a renormalization is reported.
const NORM_SLACK: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum CiFileError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed CI file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0}, expected {FORMAT_VERSION}")]
    Version(u32),
    #[error("invalid tensor: {0}")]
    Tensor(#[from] redbasis_core::Error),
}

#[derive(Deserialize)]
struct FileIn {
    format_version: u32,
    num_orbitals: usize,
    num_particles: usize,
    coefficients: Vec<EntryIn>,
}

#[derive(Deserialize)]
struct EntryIn {
    orbitals: Vec<usize>,
    value: f64,
}

#[derive(Serialize)]
struct FileOut {
    format_version: u32,
    num_orbitals: usize,
    num_particles: usize,
    coefficients: Vec<EntryOut>,
}

#[derive(Serialize)]
struct EntryOut {
    orbitals: Vec<usize>,
    value: Box<RawValue>,
}

/// A parsed file: the normalized tensor and the norm found in the file.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub tensor: CiTensor,
    pub original_norm: f64,
}

pub fn parse(text: &str) -> Result<Loaded, CiFileError> {
    let file: FileIn = serde_json::from_str(text)?;
    if file.format_version != FORMAT_VERSION {
        return Err(CiFileError::Version(file.format_version));
    }
    let entries: Vec<(Vec<usize>, f64)> = file.coefficients.into_iter().map(|e| (e.orbitals, e.value)).collect();
    let original_norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    let tensor = CiTensor::make(file.num_orbitals, file.num_particles, &entries)?;
    if (original_norm - 1.0).abs() > NORM_SLACK {
        log::warn!("coefficients had norm {original_norm}; renormalized to 1");
    }
    Ok(Loaded { tensor, original_norm })
}

pub fn to_string(t: &CiTensor) -> String {
    let coefficients = t
        .entries()
        .into_iter()
        .map(|(orbitals, v)| EntryOut {
            orbitals,
            value: RawValue::from_string(crate::fmt_f64(v)).expect("float literal is valid JSON"),
        })
        .collect();
    let file = FileOut {
        format_version: FORMAT_VERSION,
        num_orbitals: t.orbitals(),
        num_particles: t.particles(),
        coefficients,
    };
    serde_json::to_string_pretty(&file).expect("serializable") + "\n"
}

pub fn read(path: &Path) -> Result<Loaded, CiFileError> {
    let text =
        fs::read_to_string(path).map_err(|source| CiFileError::Io { path: path.display().to_string(), source })?;
    parse(&text)
}

pub fn write(path: &Path, t: &CiTensor) -> Result<(), CiFileError> {
    fs::write(path, to_string(t)).map_err(|source| CiFileError::Io { path: path.display().to_string(), source })
}
