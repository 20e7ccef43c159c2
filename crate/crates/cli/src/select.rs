use std::path::Path;

use log::info;
use shapga::baselines::{chi2_scores, mi_scores, relief_scores};
use shapga::dataset::{load_matrix, zscore_normalize, FeatureMatrix};
use shapga::estimator::{estimate_shapley_ga, evaluation_budget, exact_report};
use shapga::valuation::ClassifierGame;

use crate::config::{RunConfig, SelectionMethod};
use crate::{require_file, write_outputs, CliError};

pub const SELECTION_FILE: &str = "selection.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct SelectOutcome {
    pub method: SelectionMethod,
    /// Column indices, best first, `top_k` long.
    pub selected: Vec<usize>,
    pub names: Vec<String>,
    pub scores: Vec<f64>,
    /// Characteristic-function calls (Shapley methods only).
    pub evaluations: u64,
    pub budget: Option<u64>,
}

fn check_shape(m: &FeatureMatrix, cfg: &RunConfig) -> Result<(), CliError> {
    let d = m.n_features();
    if cfg.top_k > d {
        return Err(CliError::Validation(format!("top_k = {} exceeds the {d} features", cfg.top_k)));
    }
    if cfg.method == SelectionMethod::ShapleyGa && cfg.max_coalition_size > d {
        return Err(CliError::Validation(format!(
            "max_coalition_size = {} exceeds the {d} features",
            cfg.max_coalition_size
        )));
    }
    Ok(())
}

/// Ranks the features of an in-memory matrix. Features are z-scored over
/// all rows first.
pub fn select_features(m: &FeatureMatrix, cfg: &RunConfig) -> Result<SelectOutcome, CliError> {
    cfg.validate()?;
    check_shape(m, cfg)?;
    let all: Vec<usize> = (0..m.n_samples()).collect();
    let (z, _) = zscore_normalize(m, &all)?;

    let (scores, ranking, evaluations, budget) = match cfg.method {
        SelectionMethod::ShapleyGa | SelectionMethod::ShapleyExact => {
            let game = ClassifierGame::new(&z, cfg.valuation()?)?;
            let (report, budget) = if cfg.method == SelectionMethod::ShapleyGa {
                let ga = cfg.shapley_ga()?;
                let report = estimate_shapley_ga(&game, &ga)?;
                (report, Some(evaluation_budget(z.n_features(), &ga.ga)))
            } else {
                (exact_report(&game, cfg.exact_ceiling)?, None)
            };
            let cache = game.cache().stats();
            info!(
                "{}: {} characteristic-function evaluations{}, {} distinct coalitions trained",
                cfg.method.name(),
                report.evaluations,
                budget.map_or(String::new(), |b| format!(" (budget {b})")),
                cache.entries
            );
            (report.values.clone(), report.ranking(), report.evaluations, budget)
        }
        SelectionMethod::Chi2 | SelectionMethod::Mi | SelectionMethod::Relief => {
            let sv = match cfg.method {
                SelectionMethod::Chi2 => chi2_scores(&z, cfg.bins)?,
                SelectionMethod::Mi => mi_scores(&z, cfg.bins)?,
                _ => relief_scores(
                    &z,
                    cfg.relief_neighbors,
                    cfg.relief_iterations.min(z.n_samples()),
                    shapga::seed::derive_seed(cfg.seed, &[0x72656c]),
                )?,
            };
            let ranking = sv.ranking();
            (sv.scores, ranking, 0, None)
        }
    };
    Ok(SelectOutcome {
        method: cfg.method,
        selected: ranking.into_iter().take(cfg.top_k).collect(),
        names: m.names.clone(),
        scores,
        evaluations,
        budget,
    })
}

impl SelectOutcome {
    fn mu_field(&self, cfg: &RunConfig) -> String {
        if self.method.is_shapley() {
            cfg.mu.to_string()
        } else {
            String::new()
        }
    }

    /// `rank,feature_index,feature_name,score,method,mu` for the selected
    /// features.
    pub fn selection_csv(&self, cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        let mut w = csv::Writer::from_writer(&mut buf);
        let mu = self.mu_field(cfg);
        w.write_record(["rank", "feature_index", "feature_name", "score", "method", "mu"])
            .map_err(shapga::Error::from)?;
        for (rank, &i) in self.selected.iter().enumerate() {
            w.write_record([
                &(rank + 1).to_string(),
                &i.to_string(),
                &self.names[i],
                &self.scores[i].to_string(),
                self.method.name(),
                &mu,
            ])
            .map_err(shapga::Error::from)?;
        }
        w.flush().map_err(shapga::Error::from)?;
        drop(w);
        Ok(buf)
    }

    /// Full ranking of every feature.
    pub fn scores_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        if self.method.is_shapley() {
            let report = shapga::ShapleyReport {
                method: self.method.name().into(),
                values: self.scores.clone(),
                stratum_means: None,
                sample_counts: Vec::new(),
                evaluations: self.evaluations,
            };
            report.write(&self.names, &mut buf)?;
        } else {
            let sv = shapga::baselines::ScoreVector {
                method: self.method.name().into(),
                scores: self.scores.clone(),
                higher_is_better: true,
            };
            sv.write(&self.names, &mut buf)?;
        }
        Ok(buf)
    }

    pub fn summary_csv(&self, m: &FeatureMatrix, cfg: &RunConfig) -> Vec<u8> {
        let mut rows = vec![
            ("method".to_string(), self.method.name().to_string()),
            ("seed".into(), cfg.seed.to_string()),
            ("n_samples".into(), m.n_samples().to_string()),
            ("n_features".into(), m.n_features().to_string()),
            ("top_k".into(), cfg.top_k.to_string()),
        ];
        if self.method.is_shapley() {
            rows.push(("mu".into(), cfg.mu.to_string()));
            rows.push(("inner_classifier".into(), cfg.inner_classifier.clone()));
            rows.push(("evaluations".into(), self.evaluations.to_string()));
        }
        if self.method == SelectionMethod::ShapleyGa {
            rows.push(("max_coalition_size".into(), cfg.max_coalition_size.to_string()));
            rows.push(("samples_per_size".into(), cfg.samples_per_size.to_string()));
            rows.push(("population_size".into(), cfg.population_size.to_string()));
            rows.push(("adjustment_mode".into(), cfg.adjustment_mode.clone()));
            rows.push(("evaluation_budget".into(), self.budget.unwrap_or(0).to_string()));
        }
        let mut out = String::from("key,value\n");
        for (k, v) in rows {
            out.push_str(&format!("{k},{v}\n"));
        }
        out.into_bytes()
    }
}

/// Loads the matrix, ranks its features, and writes the selection, the
/// full score table, and a run summary into `out_dir`.
pub fn cmd_select(matrix: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<SelectOutcome, CliError> {
    require_file(matrix, "matrix")?;
    let m = load_matrix(matrix)?;
    let outcome = select_features(&m, cfg)?;
    write_outputs(
        out_dir,
        &[
            (SELECTION_FILE.into(), outcome.selection_csv(cfg)?),
            (SCORES_FILE.into(), outcome.scores_csv()?),
            (SUMMARY_FILE.into(), outcome.summary_csv(&m, cfg)),
        ],
    )?;
    Ok(outcome)
}
