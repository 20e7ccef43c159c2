use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use shapga::signal::{Provenance, SignalSource};

use crate::{require_file, CliError};

/// Column order of the frequency table after `method`, `mu`, `total`.
pub const GROUPS: [&str; 5] = ["ecg_wavelet", "pleth_wavelet", "abp_wavelet", "ecg_hrv", "untagged"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyRow {
    pub method: String,
    pub mu: String,
    pub total: usize,
    /// Counts in [`GROUPS`] order.
    pub counts: [usize; 5],
}

fn group_of(name: &str) -> usize {
    match Provenance::parse(name).map(|p| p.source) {
        Some(SignalSource::EcgWavelet) => 0,
        Some(SignalSource::PlethWavelet) => 1,
        Some(SignalSource::AbpWavelet) => 2,
        Some(SignalSource::EcgHrv) => 3,
        None => 4,
    }
}

/// Tallies feature names by signal source.
pub fn frequency_row(method: &str, mu: &str, names: &[String]) -> FrequencyRow {
    let mut counts = [0; 5];
    for name in names {
        counts[group_of(name)] += 1;
    }
    FrequencyRow {
        method: method.into(),
        mu: mu.into(),
        total: names.len(),
        counts,
    }
}

fn read_row(path: &Path) -> Result<FrequencyRow, CliError> {
    require_file(path, "selection file")?;
    let mut reader = csv::Reader::from_path(path).map_err(shapga::Error::from)?;
    let headers = reader.headers().map_err(shapga::Error::from)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let name_col = col("feature_name")
        .ok_or_else(|| CliError::Validation(format!("{}: no feature_name column", path.display())))?;
    let (method_col, mu_col) = (col("method"), col("mu"));

    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut method = None;
    let mut mu = String::new();
    let mut names = Vec::new();
    for record in reader.records() {
        let record = record.map_err(shapga::Error::from)?;
        names.push(record[name_col].to_string());
        if method.is_none() {
            method = method_col.map(|c| record[c].to_string());
            mu = mu_col.map(|c| record[c].to_string()).unwrap_or_default();
        }
    }
    Ok(frequency_row(&method.unwrap_or(fallback), &mu, &names))
}

pub fn render(rows: &[FrequencyRow]) -> Vec<u8> {
    let mut out = format!("method,mu,total,{}\n", GROUPS.join(","));
    for r in rows {
        let counts: Vec<String> = r.counts.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{},{},{},{}", r.method, r.mu, r.total, counts.join(","));
    }
    out.into_bytes()
}

/// One frequency row per selection file, in argument order.
pub fn cmd_report(selections: &[PathBuf], out: &Path) -> Result<Vec<FrequencyRow>, CliError> {
    if selections.is_empty() {
        return Err(CliError::Validation("no selection files given".into()));
    }
    let rows = selections.iter().map(|p| read_row(p)).collect::<Result<Vec<_>, _>>()?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(out, render(&rows)).map_err(|e| CliError::io(out, e))?;
    Ok(rows)
}
