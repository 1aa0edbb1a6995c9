//! Joins user-supplied measurements onto a simulated trace.
//!
//! Each data row is matched with the trace sample nearest in time; residuals
//! are `data - trace`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Columns that can be compared.
pub const OVERLAY_COLUMNS: [&str; 2] = ["E", "B_max"];

#[derive(Debug, Clone)]
pub struct Table {
    pub t: Vec<f64>,
    pub columns: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residuals {
    pub n: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlayReport {
    pub trace: String,
    pub data: String,
    /// Largest distance in time between a data row and its matched sample.
    pub max_time_gap: f64,
    pub residuals: BTreeMap<String, Residuals>,
}

fn malformed(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: malformed CSV: {msg}", path.display()))
}

/// Reads `t` and whichever overlay columns are present.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| malformed(path, e))?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(malformed(path, "empty file"));
    }
    let t_col = headers
        .iter()
        .position(|h| h == "t")
        .ok_or_else(|| malformed(path, "no `t` column"))?;
    let wanted: Vec<(usize, &str)> = OVERLAY_COLUMNS
        .iter()
        .filter_map(|name| headers.iter().position(|h| h == *name).map(|i| (i, *name)))
        .collect();
    if wanted.is_empty() {
        return Err(malformed(path, "needs an `E` or `B_max` column"));
    }

    let mut table = Table {
        t: Vec::new(),
        columns: wanted.iter().map(|(_, n)| (n.to_string(), Vec::new())).collect(),
    };
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| malformed(path, e))?;
        let line = row + 2;
        let num = |i: usize| -> CliResult<f64> {
            let field = rec.get(i).ok_or_else(|| malformed(path, format!("line {line}: missing field")))?;
            let v: f64 = field
                .parse()
                .map_err(|_| malformed(path, format!("line {line}: not a number: {field:?}")))?;
            if v.is_nan() {
                return Err(malformed(path, format!("line {line}: NaN")));
            }
            Ok(v)
        };
        let t = num(t_col)?;
        if let Some(&prev) = table.t.last() {
            if t <= prev {
                return Err(malformed(path, format!("line {line}: t = {t} does not increase (previous {prev})")));
            }
        }
        table.t.push(t);
        for (i, name) in &wanted {
            let v = num(*i)?;
            table.columns.get_mut(*name).expect("column registered").push(v);
        }
    }
    if table.t.is_empty() {
        return Err(malformed(path, "no data rows"));
    }
    Ok(table)
}

/// Index of the sample in the sorted `times` closest to `t`; ties go to the
/// earlier sample.
pub fn nearest(times: &[f64], t: f64) -> usize {
    let k = times.partition_point(|&x| x < t);
    if k == 0 {
        0
    } else if k == times.len() {
        times.len() - 1
    } else if t - times[k - 1] <= times[k] - t {
        k - 1
    } else {
        k
    }
}

pub fn overlay(trace: &Table, data: &Table) -> CliResult<(f64, BTreeMap<String, Residuals>)> {
    let idx: Vec<usize> = data.t.iter().map(|&t| nearest(&trace.t, t)).collect();
    let max_gap = data
        .t
        .iter()
        .zip(&idx)
        .map(|(t, &k)| (t - trace.t[k]).abs())
        .fold(0.0, f64::max);
    let mut out = BTreeMap::new();
    for (name, values) in &data.columns {
        let reference = trace
            .columns
            .get(name)
            .ok_or_else(|| CliError::Config(format!("data column {name} is absent from the trace")))?;
        let r: Vec<f64> = values.iter().zip(&idx).map(|(v, &k)| v - reference[k]).collect();
        let n = r.len() as f64;
        out.insert(
            name.clone(),
            Residuals {
                n: r.len(),
                max_abs: r.iter().map(|x| x.abs()).fold(0.0, f64::max),
                mean_abs: r.iter().map(|x| x.abs()).sum::<f64>() / n,
                mean: r.iter().sum::<f64>() / n,
            },
        );
    }
    Ok((max_gap, out))
}

pub fn run_overlay(trace_path: &Path, data_path: &Path) -> CliResult<OverlayReport> {
    let trace = read_table(trace_path)?;
    let data = read_table(data_path)?;
    let (max_time_gap, residuals) = overlay(&trace, &data)?;
    Ok(OverlayReport {
        trace: trace_path.display().to_string(),
        data: data_path.display().to_string(),
        max_time_gap,
        residuals,
    })
}
