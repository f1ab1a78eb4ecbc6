//! File formats, the parallel ensemble runner and report writers behind the
//! `redbasis` command-line tool.

pub mod cifile;
pub mod runner;
pub mod table;

/// Formats a float with 17 significant digits (round-trips exactly).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
