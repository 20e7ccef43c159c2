//! Feature matrices, z-score normalization, and repeated k-fold plans.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

pub const LABEL_COLUMN: &str = "label";
pub const ID_COLUMN: &str = "id";

/// Rows are samples, columns are features. `labels[r]` is true for a true
/// alarm.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Array2<f64>,
    pub labels: Vec<bool>,
    pub names: Vec<String>,
    pub ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(data: Array2<f64>, labels: Vec<bool>, names: Vec<String>) -> Result<Self> {
        let ids = (0..data.nrows()).map(|r| r.to_string()).collect();
        FeatureMatrix::with_ids(data, labels, names, ids)
    }

    pub fn with_ids(data: Array2<f64>, labels: Vec<bool>, names: Vec<String>, ids: Vec<String>) -> Result<Self> {
        if labels.len() != data.nrows() || ids.len() != data.nrows() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                got: labels.len().min(ids.len()),
            });
        }
        if names.len() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.ncols(),
                got: names.len(),
            });
        }
        for ((r, c), v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: r,
                    column: names[c].clone(),
                });
            }
        }
        Ok(FeatureMatrix { data, labels, names, ids })
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            data: self.data.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            names: self.names.clone(),
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            data: self.data.select(Axis(1), columns),
            labels: self.labels.clone(),
            names: columns.iter().map(|&c| self.names[c].clone()).collect(),
            ids: self.ids.clone(),
        }
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

fn parse_label(raw: &str, line: usize) -> Result<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" => Ok(true),
        "0" | "false" | "f" | "no" => Ok(false),
        _ => Err(Error::NonNumeric {
            line,
            column: LABEL_COLUMN.into(),
            value: raw.into(),
        }),
    }
}

/// Reads a comma-delimited matrix with a header row, a `label` column, and
/// an optional leading `id` column.
pub fn read_matrix<R: Read>(reader: R) -> Result<FeatureMatrix> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = csv.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::EmptyInput("matrix file has no header".into())),
    };
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptyInput("matrix file has no header".into()));
    }
    let label_col = header
        .iter()
        .position(|h| h == LABEL_COLUMN)
        .ok_or(Error::MissingLabelColumn)?;
    let id_col = header.iter().position(|h| h == ID_COLUMN);
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != label_col && Some(c) != id_col)
        .collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (k, record) in records.enumerate() {
        let record = record?;
        let line = k + 2;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        labels.push(parse_label(&record[label_col], line)?);
        ids.push(id_col.map_or_else(|| k.to_string(), |c| record[c].to_string()));
        for &c in &feature_cols {
            let v: f64 = record[c].parse().map_err(|_| Error::NonNumeric {
                line,
                column: header[c].clone(),
                value: record[c].to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: k,
                    column: header[c].clone(),
                });
            }
            values.push(v);
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("matrix file has no data rows".into()));
    }
    let data = Array2::from_shape_vec((labels.len(), feature_cols.len()), values)
        .expect("row lengths checked above");
    let names = feature_cols.iter().map(|&c| header[c].clone()).collect();
    FeatureMatrix::with_ids(data, labels, names, ids)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    read_matrix(std::fs::File::open(path)?)
}

/// Writes `id, <features...>, label` with shortest round-trip float
/// formatting.
pub fn write_matrix<W: Write>(m: &FeatureMatrix, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec![ID_COLUMN.to_string()];
    header.extend(m.names.iter().cloned());
    header.push(LABEL_COLUMN.into());
    out.write_record(&header)?;
    for (r, row) in m.data.rows().into_iter().enumerate() {
        let mut fields = vec![m.ids[r].clone()];
        fields.extend(row.iter().map(|v| v.to_string()));
        fields.push(if m.labels[r] { "1" } else { "0" }.into());
        out.write_record(&fields)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub constant: bool,
}

/// Z-scores every column using statistics of the `train` rows only.
/// Columns that are constant on the training rows become all zeros.
pub fn zscore_normalize(m: &FeatureMatrix, train: &[usize]) -> Result<(FeatureMatrix, Vec<ColumnStats>)> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training index set".into()));
    }
    if let Some(&bad) = train.iter().find(|&&r| r >= m.n_samples()) {
        return Err(Error::InvalidArgument(format!("training row {bad} out of range")));
    }
    let n = train.len() as f64;
    let stats: Vec<ColumnStats> = m
        .data
        .columns()
        .into_iter()
        .map(|col| {
            let mean = train.iter().map(|&r| col[r]).sum::<f64>() / n;
            let var = train.iter().map(|&r| (col[r] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            ColumnStats {
                mean,
                std,
                constant: std <= 1e-12 * mean.abs().max(1.0),
            }
        })
        .collect();
    let mut data = m.data.clone();
    for (mut col, s) in data.columns_mut().into_iter().zip(&stats) {
        if s.constant {
            col.fill(0.0);
        } else {
            col.mapv_inplace(|v| (v - s.mean) / s.std);
        }
    }
    Ok((
        FeatureMatrix {
            data,
            labels: m.labels.clone(),
            names: m.names.clone(),
            ids: m.ids.clone(),
        },
        stats,
    ))
}

/// Test-fold assignments for repeated k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub n_samples: usize,
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub stratified: bool,
    /// `folds[repeat][fold]` holds sorted test indices.
    pub folds: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn check_fold_args(n: usize, k: usize, repeats: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be at least 2".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {n} samples")));
    }
    if repeats < 1 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    Ok(())
}

/// Deals `order` round-robin into `k` folds, starting at fold `start`.
fn deal(order: &[usize], k: usize, start: usize, folds: &mut [Vec<usize>]) -> usize {
    let mut f = start;
    for &i in order {
        folds[f].push(i);
        f = (f + 1) % k;
    }
    f
}

/// Unstratified plan: each repeat shuffles all indices and deals them into
/// `k` folds whose sizes differ by at most one.
pub fn repeated_kfold(n: usize, k: usize, repeats: usize, seed: u64) -> Result<FoldPlan> {
    check_fold_args(n, k, repeats)?;
    let folds = (0..repeats)
        .map(|r| {
            let mut rng = seed::rng_for(seed, &[r as u64]);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut folds = vec![Vec::new(); k];
            deal(&order, k, 0, &mut folds);
            folds.iter_mut().for_each(|f| f.sort_unstable());
            folds
        })
        .collect();
    Ok(FoldPlan {
        n_samples: n,
        k,
        repeats,
        seed,
        stratified: false,
        folds,
    })
}

/// Label-stratified plan: positives and then negatives are dealt in one
/// continuous round-robin, so fold sizes still differ by at most one.
pub fn stratified_kfold(labels: &[bool], k: usize, repeats: usize, seed: u64) -> Result<FoldPlan> {
    let n = labels.len();
    check_fold_args(n, k, repeats)?;
    let folds = (0..repeats)
        .map(|r| {
            let mut rng = seed::rng_for(seed, &[r as u64]);
            let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
            let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            let mut folds = vec![Vec::new(); k];
            let next = deal(&pos, k, 0, &mut folds);
            deal(&neg, k, next, &mut folds);
            folds.iter_mut().for_each(|f| f.sort_unstable());
            folds
        })
        .collect();
    Ok(FoldPlan {
        n_samples: n,
        k,
        repeats,
        seed,
        stratified: true,
        folds,
    })
}

impl FoldPlan {
    /// All (train, test) pairs, repeat-major.
    pub fn splits(&self) -> Vec<Split> {
        let mut out = Vec::with_capacity(self.repeats * self.k);
        for (repeat, folds) in self.folds.iter().enumerate() {
            for (fold, test) in folds.iter().enumerate() {
                let mut in_test = vec![false; self.n_samples];
                test.iter().for_each(|&i| in_test[i] = true);
                let train = (0..self.n_samples).filter(|&i| !in_test[i]).collect();
                out.push(Split {
                    repeat,
                    fold,
                    train,
                    test: test.clone(),
                });
            }
        }
        out
    }

    /// `repeat,fold,test_indices` with indices space-separated.
    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["repeat", "fold", "test_indices"])?;
        for (r, folds) in self.folds.iter().enumerate() {
            for (f, test) in folds.iter().enumerate() {
                let idx: Vec<String> = test.iter().map(|i| i.to_string()).collect();
                out.write_record([r.to_string(), f.to_string(), idx.join(" ")])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Stratified single split: about `holdout_fraction` of each class goes to
/// the validation side, with at least one row of each class on both sides
/// whenever the class has two or more rows.
pub fn stratified_holdout(labels: &[bool], holdout_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction must lie in (0, 1), got {holdout_fraction}"
        )));
    }
    let mut rng = seed::rng_for(seed, &[0x686f_6c64]);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let mut n_valid = (idx.len() as f64 * holdout_fraction).round() as usize;
        if idx.len() >= 2 {
            n_valid = n_valid.clamp(1, idx.len() - 1);
        }
        valid.extend_from_slice(&idx[..n_valid]);
        train.extend_from_slice(&idx[n_valid..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    Ok((train, valid))
}
