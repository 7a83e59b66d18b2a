//! Report writers. Everything written is a pure function of the inputs.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(dir, name, &s)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
    println!("wrote {}", p.display());
    Ok(p)
}

/// Rows of `header` columns as CSV.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)?)
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}
