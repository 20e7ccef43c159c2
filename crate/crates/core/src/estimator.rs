//! End-to-end Shapley estimation: GA sampling per stratum, EX1 adjustment,
//! truncated averaging.

use std::io::Write;

use rayon::prelude::*;

use crate::baselines::{rank_descending, ScoreVector};
use crate::error::{Error, Result};
use crate::ex1::{adjusted_mean, Ex1Config};
use crate::ga::{collect_samples, GaConfig};
use crate::game::{exact_shapley, CountingGame, Game, StratumMeans};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShapleyGaConfig {
    pub ga: GaConfig,
    pub adjust: Ex1Config,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyReport {
    pub method: String,
    pub values: Vec<f64>,
    /// Adjusted per-stratum means; absent for the exact method.
    pub stratum_means: Option<StratumMeans>,
    /// `sample_counts[i][t]` samples were drawn for feature `i`, size `t`.
    pub sample_counts: Vec<Vec<usize>>,
    /// Calls made to the characteristic function, cache hits included.
    pub evaluations: u64,
}

impl ShapleyReport {
    pub fn ranking(&self) -> Vec<usize> {
        rank_descending(&self.values)
    }

    pub fn to_scores(&self) -> ScoreVector {
        ScoreVector {
            method: self.method.clone(),
            scores: self.values.clone(),
            higher_is_better: true,
        }
    }

    /// Writes `feature_index,feature_name,shapley_value,rank` in rank order.
    pub fn write<W: Write>(&self, names: &[String], writer: W) -> Result<()> {
        if names.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: names.len(),
            });
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["feature_index", "feature_name", "shapley_value", "rank"])?;
        for (rank, &i) in self.ranking().iter().enumerate() {
            w.write_record([
                &i.to_string(),
                names[i].as_str(),
                &self.values[i].to_string(),
                &(rank + 1).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Every (feature, size) stratum below the size cap is sampled
/// independently, in parallel; each uses its own seed stream so the result
/// does not depend on scheduling.
pub fn estimate_shapley_ga<G: Game + Sync>(game: &G, cfg: &ShapleyGaConfig) -> Result<ShapleyReport> {
    let n = game.n_players();
    cfg.ga.validate(n)?;
    let max_size = cfg.ga.max_coalition_size;
    let counting = CountingGame::new(game);
    let tasks: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..max_size).map(move |t| (i, t))).collect();
    let strata: Vec<(f64, usize)> = tasks
        .par_iter()
        .map(|&(i, t)| {
            let set = collect_samples(&counting, i, t, &cfg.ga)?;
            Ok((adjusted_mean(&set, &cfg.adjust)?, set.len()))
        })
        .collect::<Result<_>>()?;

    let mut means = StratumMeans::new(n, max_size);
    let mut sample_counts = vec![vec![0; max_size]; n];
    for (&(i, t), &(mean, count)) in tasks.iter().zip(&strata) {
        means.set(i, t, mean);
        sample_counts[i][t] = count;
    }
    let values = crate::game::truncated_shapley(&means, max_size)?;
    Ok(ShapleyReport {
        method: "shapley-ga".into(),
        values,
        stratum_means: Some(means),
        sample_counts,
        evaluations: counting.calls(),
    })
}

/// Exhaustive Shapley values wrapped as a report.
pub fn exact_report<G: Game>(game: &G, ceiling: usize) -> Result<ShapleyReport> {
    let counting = CountingGame::new(game);
    let values = exact_shapley(&counting, ceiling)?;
    Ok(ShapleyReport {
        method: "shapley-exact".into(),
        values,
        stratum_means: None,
        sample_counts: Vec::new(),
        evaluations: counting.calls(),
    })
}

/// Upper bound on characteristic-function calls for a GA run.
pub fn evaluation_budget(n_players: usize, cfg: &GaConfig) -> u64 {
    2 * n_players as u64 * cfg.max_coalition_size as u64 * cfg.samples_per_size as u64
}
