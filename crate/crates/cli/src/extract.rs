use std::path::{Path, PathBuf};

use log::warn;
use ndarray::Array2;
use rayon::prelude::*;
use shapga::dataset::{write_matrix, FeatureMatrix};
use shapga::signal::{extract_all, feature_names, load_record, N_FEATURES};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractSummary {
    pub rows: usize,
    /// `(file, error)` for every record that could not be processed.
    pub skipped: Vec<(String, String)>,
    /// Records whose heart-rate block was zero-filled.
    pub hrv_flagged: Vec<String>,
}

fn record_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Validation(format!("records directory {} does not exist", dir.display())));
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let hidden = path.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Extracts one row per readable record, ordered by record id, and writes
/// the matrix to `out`. Unreadable records are skipped with a warning; the
/// command fails only when none succeed.
pub fn cmd_extract(records: &Path, out: &Path) -> Result<ExtractSummary, CliError> {
    let files = record_files(records)?;
    if files.is_empty() {
        return Err(CliError::Validation(format!("no record files in {}", records.display())));
    }
    let results: Vec<_> = files
        .par_iter()
        .map(|path| load_record(path).and_then(|rec| extract_all(&rec).map(|fv| (rec, fv))))
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (path, result) in files.iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                skipped.push((path.display().to_string(), e.to_string()));
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Validation(format!(
            "none of the {} record files could be processed",
            files.len()
        )));
    }
    rows.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    let mut hrv_flagged = Vec::new();
    let mut data = Array2::zeros((rows.len(), N_FEATURES));
    for (r, (rec, fv)) in rows.iter().enumerate() {
        if fv.hrv_flagged {
            warn!("{}: too few R-peaks, heart-rate features set to 0", rec.id);
            hrv_flagged.push(rec.id.clone());
        }
        data.row_mut(r).assign(&ndarray::ArrayView1::from(&fv.values));
    }
    let labels = rows.iter().map(|(rec, _)| rec.label).collect();
    let ids = rows.iter().map(|(rec, _)| rec.id.clone()).collect();
    let matrix = FeatureMatrix::with_ids(data, labels, feature_names(), ids)?;

    let mut bytes = Vec::new();
    write_matrix(&matrix, &mut bytes)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(out, bytes).map_err(|e| CliError::io(out, e))?;
    Ok(ExtractSummary {
        rows: matrix.n_samples(),
        skipped,
        hrv_flagged,
    })
}
