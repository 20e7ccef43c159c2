use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use shapga::classifiers::{self, roc_auc, ClassifierKind, Hyperparams};
use shapga::dataset::{load_matrix, repeated_kfold, stratified_kfold, zscore_normalize, FeatureMatrix, FoldPlan, Split};
use shapga::seed::derive_seed;

use crate::config::RunConfig;
use crate::{require_file, write_outputs, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct FoldMetrics {
    pub classifier: ClassifierKind,
    pub repeat: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierSummary {
    pub classifier: ClassifierKind,
    pub accuracy: f64,
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    /// ROC over the test scores of every fold, pooled.
    pub pooled_roc: shapga::classifiers::RocCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub folds: Vec<FoldMetrics>,
    pub summaries: Vec<ClassifierSummary>,
    pub plan: FoldPlan,
}

/// Reads the `feature_name` column of a selection file.
pub fn read_selection(path: &Path) -> Result<Vec<String>, CliError> {
    require_file(path, "selection file")?;
    let mut reader = csv::Reader::from_path(path).map_err(shapga::Error::from)?;
    let col = reader
        .headers()
        .map_err(shapga::Error::from)?
        .iter()
        .position(|h| h == "feature_name")
        .ok_or_else(|| CliError::Validation(format!("{}: no feature_name column", path.display())))?;
    let mut names = Vec::new();
    for record in reader.records() {
        names.push(record.map_err(shapga::Error::from)?[col].to_string());
    }
    Ok(names)
}

fn fold_plan(m: &FeatureMatrix, cfg: &RunConfig) -> Result<FoldPlan, CliError> {
    let seed = derive_seed(cfg.seed, &[0x6576616c]);
    if cfg.stratified {
        let pos = m.positives();
        if pos < cfg.folds || m.n_samples() - pos < cfg.folds {
            return Err(CliError::Validation(format!(
                "each class needs at least {} samples for stratified {}-fold evaluation",
                cfg.folds, cfg.folds
            )));
        }
        Ok(stratified_kfold(&m.labels, cfg.folds, cfg.repeats, seed)?)
    } else {
        Ok(repeated_kfold(m.n_samples(), cfg.folds, cfg.repeats, seed)?)
    }
}

fn run_split(
    m: &FeatureMatrix,
    split: &Split,
    kind: ClassifierKind,
    index: usize,
    seed: u64,
) -> Result<(FoldMetrics, Vec<f64>), CliError> {
    let (z, _) = zscore_normalize(m, &split.train)?;
    let train = z.select_rows(&split.train);
    let test = z.select_rows(&split.test);
    let model = classifiers::train(
        kind,
        train.view(),
        &train.labels,
        &Hyperparams::default(),
        derive_seed(seed, &[split.repeat as u64, split.fold as u64, index as u64]),
    )?;
    let scores = model.scores(test.view())?;
    let report = classifiers::evaluate(&model, test.view(), &test.labels)?;
    let auc = roc_auc(&scores, &test.labels).map(|r| r.auc).unwrap_or(f64::NAN);
    Ok((
        FoldMetrics {
            classifier: kind,
            repeat: split.repeat,
            fold: split.fold,
            accuracy: report.accuracy,
            auc,
            sensitivity: report.sensitivity,
            specificity: report.specificity,
        },
        scores,
    ))
}

fn mean_finite(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.filter(|v| v.is_finite()).fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Repeated k-fold evaluation of every configured classifier on the
/// columns named in `features`. Normalization statistics come from each
/// training split only.
pub fn evaluate_selection(m: &FeatureMatrix, features: &[String], cfg: &RunConfig) -> Result<Evaluation, CliError> {
    cfg.validate()?;
    if features.is_empty() {
        return Err(CliError::Validation("selection is empty".into()));
    }
    let columns = features
        .iter()
        .map(|f| {
            m.feature_index(f)
                .ok_or_else(|| CliError::Validation(format!("unknown feature {f:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sub = m.select_columns(&columns);
    let plan = fold_plan(&sub, cfg)?;
    let splits = plan.splits();
    let kinds = cfg.classifier_kinds()?;

    let jobs: Vec<(usize, &Split)> = (0..kinds.len()).flat_map(|c| splits.iter().map(move |s| (c, s))).collect();
    let results = jobs
        .par_iter()
        .map(|&(c, split)| run_split(&sub, split, kinds[c], c, cfg.seed))
        .collect::<Result<Vec<_>, _>>()?;

    let mut folds = Vec::with_capacity(results.len());
    let mut summaries = Vec::with_capacity(kinds.len());
    for (c, &kind) in kinds.iter().enumerate() {
        let mine: Vec<&(FoldMetrics, Vec<f64>)> = jobs
            .iter()
            .zip(&results)
            .filter(|((jc, _), _)| *jc == c)
            .map(|(_, r)| r)
            .collect();
        let mut pooled_scores = Vec::new();
        let mut pooled_labels = Vec::new();
        for ((_, split), (_, scores)) in jobs.iter().filter(|(jc, _)| *jc == c).zip(&mine) {
            pooled_scores.extend_from_slice(scores);
            pooled_labels.extend(split.test.iter().map(|&i| sub.labels[i]));
        }
        let metrics: Vec<&FoldMetrics> = mine.iter().map(|(f, _)| f).collect();
        summaries.push(ClassifierSummary {
            classifier: kind,
            accuracy: mean_finite(metrics.iter().map(|f| f.accuracy)),
            auc: mean_finite(metrics.iter().map(|f| f.auc)),
            sensitivity: mean_finite(metrics.iter().map(|f| f.sensitivity)),
            specificity: mean_finite(metrics.iter().map(|f| f.specificity)),
            pooled_roc: roc_auc(&pooled_scores, &pooled_labels)?,
        });
        folds.extend(metrics.into_iter().cloned());
    }
    Ok(Evaluation { folds, summaries, plan })
}

impl Evaluation {
    pub fn metrics_csv(&self) -> Vec<u8> {
        let mut out = String::from("classifier,repeat,fold,accuracy,auc,sensitivity,specificity\n");
        for f in &self.folds {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                f.classifier, f.repeat, f.fold, f.accuracy, f.auc, f.sensitivity, f.specificity
            );
        }
        out.into_bytes()
    }

    pub fn summary_csv(&self) -> Vec<u8> {
        let mut out = String::from("classifier,accuracy,auc,sensitivity,specificity,pooled_auc\n");
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.classifier, s.accuracy, s.auc, s.sensitivity, s.specificity, s.pooled_roc.auc
            );
        }
        out.into_bytes()
    }

    pub fn roc_csv(summary: &ClassifierSummary) -> Vec<u8> {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &summary.pooled_roc.points {
            let _ = writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr);
        }
        out.into_bytes()
    }
}

/// Writes `metrics.csv` (one row per classifier, repeat and fold),
/// `summary.csv`, `folds.csv`, and `roc_<classifier>.csv` into `out_dir`.
pub fn cmd_evaluate(matrix: &Path, selection: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<Evaluation, CliError> {
    require_file(matrix, "matrix")?;
    let features = read_selection(selection)?;
    let m = load_matrix(matrix)?;
    let eval = evaluate_selection(&m, &features, cfg)?;
    let mut plan = Vec::new();
    eval.plan.write(&mut plan)?;
    let mut files = vec![
        ("metrics.csv".to_string(), eval.metrics_csv()),
        ("summary.csv".to_string(), eval.summary_csv()),
        ("folds.csv".to_string(), plan),
    ];
    for s in &eval.summaries {
        files.push((format!("roc_{}.csv", s.classifier), Evaluation::roc_csv(s)));
    }
    write_outputs(out_dir, &files)?;
    Ok(eval)
}
