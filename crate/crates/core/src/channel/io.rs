//! CSV import/export of pulse responses with a JSON metadata sidecar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{samples_per_symbol, PulseResponseSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseMeta {
    pub dt: f64,
    #[serde(rename = "T")]
    pub symbol_period: f64,
    pub n: usize,
    pub memory_span: usize,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn header(n: usize) -> Vec<String> {
    let mut h = vec!["time_s".to_string()];
    for i in 0..n {
        for j in 0..n {
            h.push(format!("e_{i}_{j}"));
        }
    }
    h
}

/// Writes `path` (CSV) and its `.json` sidecar.
pub fn export_responses(prs: &PulseResponseSet, path: &Path) -> Result<()> {
    let n = prs.n();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(n))?;
    let mut rec = Vec::with_capacity(n * n + 1);
    for k in 0..prs.len() {
        rec.clear();
        rec.push(format!("{:e}", k as f64 * prs.dt));
        for i in 0..n {
            for j in 0..n {
                rec.push(format!("{:e}", prs.e[i][j][k]));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    let meta = ResponseMeta {
        dt: prs.dt,
        symbol_period: prs.symbol_period,
        n,
        memory_span: prs.memory_span,
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn import_responses(path: &Path) -> Result<PulseResponseSet> {
    let meta: ResponseMeta = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let n = meta.n;
    if n == 0 {
        return Err(Error::MalformedResponse("sidecar declares zero wires".into()));
    }
    samples_per_symbol(meta.dt, meta.symbol_period)?;
    let mut r = csv::Reader::from_path(path)?;
    let hdr = r.headers()?.clone();
    let want = header(n);
    let mut cols = Vec::with_capacity(want.len());
    for name in &want {
        let c = hdr.iter().position(|h| h.trim() == name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
        cols.push(c);
    }
    if hdr.len() != want.len() {
        return Err(Error::DimensionMismatch {
            context: "response CSV columns",
            expected: want.len(),
            actual: hdr.len(),
        });
    }
    let mut e = vec![vec![Vec::new(); n]; n];
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("").trim();
            s.parse::<f64>()
                .map_err(|_| Error::MalformedResponse(format!("row {k}: cannot parse `{s}`")))
        };
        let t = parse(cols[0])?;
        let expect = k as f64 * meta.dt;
        if (t - expect).abs() > 1e-6 * meta.dt {
            return Err(Error::NonUniformGrid(k));
        }
        for i in 0..n {
            for j in 0..n {
                e[i][j].push(parse(cols[1 + i * n + j])?);
            }
        }
    }
    if e[0][0].is_empty() {
        return Err(Error::MalformedResponse("no samples".into()));
    }
    PulseResponseSet::new(meta.dt, meta.symbol_period, meta.memory_span, e)
}
