//! Per-epoch experiment output, one row per (method, trial, epoch).
//!
//! Columns: `method, trial, seed, epoch, rse, bound_ik, bound_rk`. Bounds are
//! norm envelopes `ρ_IK^k` and `ρ_RK^{mk}`, comparable with `√rse`. Reals
//! are written with 17 significant digits; a missing bound is an empty CSV
//! cell or JSON `null`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "method,trial,seed,epoch,rse,bound_ik,bound_rk";

/// One method's run on one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub method: String,
    pub trial: usize,
    pub seed: u64,
    /// RSE of iterates `x⁰, x¹, …`, so `rse[0] == 1`.
    pub rse: Vec<f64>,
    /// Not written to disk; outputs must not depend on timing.
    pub wall_time: Duration,
    pub bound_ik: Option<Vec<f64>>,
    pub bound_rk: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub method: String,
    pub trial: usize,
    pub seed: u64,
    pub epoch: usize,
    pub rse: f64,
    pub bound_ik: Option<f64>,
    pub bound_rk: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Usage(format!("unknown output format '{other}'"))),
        }
    }
}

pub fn flatten(records: &[ExperimentRecord]) -> Vec<RecordRow> {
    let mut rows = Vec::new();
    for r in records {
        for (epoch, &rse) in r.rse.iter().enumerate() {
            rows.push(RecordRow {
                method: r.method.clone(),
                trial: r.trial,
                seed: r.seed,
                epoch,
                rse,
                bound_ik: r.bound_ik.as_ref().and_then(|b| b.get(epoch).copied()),
                bound_rk: r.bound_rk.as_ref().and_then(|b| b.get(epoch).copied()),
            });
        }
    }
    rows
}

fn real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn json_real(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.16e}"),
        _ => "null".to_string(),
    }
}

pub fn write_csv<W: Write>(rows: &[RecordRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        if r.method.contains([',', '"', '\n']) {
            return Err(Error::invalid(format!("method name {:?} is not CSV-safe", r.method)));
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method,
            r.trial,
            r.seed,
            r.epoch,
            real(r.rse),
            r.bound_ik.map(real).unwrap_or_default(),
            r.bound_rk.map(real).unwrap_or_default(),
        )?;
    }
    Ok(())
}

pub fn write_json<W: Write>(rows: &[RecordRow], mut out: W) -> Result<()> {
    writeln!(out, "[")?;
    for (k, r) in rows.iter().enumerate() {
        let method = serde_json::to_string(&r.method).map_err(|e| Error::invalid(e.to_string()))?;
        write!(
            out,
            "  {{\"method\":{method},\"trial\":{},\"seed\":{},\"epoch\":{},\"rse\":{},\"bound_ik\":{},\"bound_rk\":{}}}",
            r.trial,
            r.seed,
            r.epoch,
            json_real(Some(r.rse)),
            json_real(r.bound_ik),
            json_real(r.bound_rk),
        )?;
        writeln!(out, "{}", if k + 1 < rows.len() { "," } else { "" })?;
    }
    writeln!(out, "]")?;
    Ok(())
}

pub fn write_records(records: &[ExperimentRecord], path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Usage("no records to write".into()));
    }
    let rows = flatten(records);
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    match format {
        OutputFormat::Csv => write_csv(&rows, &mut w)?,
        OutputFormat::Json => write_json(&rows, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn parse_opt(tok: &str, line: usize) -> Result<Option<f64>> {
    if tok.is_empty() {
        Ok(None)
    } else {
        tok.parse().map(Some).map_err(|_| Error::parse(line, format!("bad real '{tok}'")))
    }
}

pub fn read_records(path: impl AsRef<Path>, format: OutputFormat) -> Result<Vec<RecordRow>> {
    let file = File::open(path.as_ref())?;
    match format {
        OutputFormat::Json => serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::parse(e.line(), e.to_string())),
        OutputFormat::Csv => {
            let mut rows = Vec::new();
            for (k, line) in BufReader::new(file).lines().enumerate() {
                let (n, line) = (k + 1, line?);
                if n == 1 {
                    if line != CSV_HEADER {
                        return Err(Error::parse(1, "unexpected CSV header"));
                    }
                    continue;
                }
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 7 {
                    return Err(Error::parse(n, format!("expected 7 fields, found {}", f.len())));
                }
                let int = |s: &str| s.parse::<u64>().map_err(|_| Error::parse(n, format!("bad integer '{s}'")));
                rows.push(RecordRow {
                    method: f[0].to_string(),
                    trial: int(f[1])? as usize,
                    seed: int(f[2])?,
                    epoch: int(f[3])? as usize,
                    rse: parse_opt(f[4], n)?.ok_or_else(|| Error::parse(n, "missing rse"))?,
                    bound_ik: parse_opt(f[5], n)?,
                    bound_rk: parse_opt(f[6], n)?,
                });
            }
            Ok(rows)
        }
    }
}
