//! Filter-style reference scorers: χ², histogram mutual information, and
//! ReliefF.

use std::io::Write;

use ndarray::ArrayView1;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_NEIGHBORS: usize = 5;
pub const MAX_RELIEF_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub method: String,
    pub scores: Vec<f64>,
    pub higher_is_better: bool,
}

impl ScoreVector {
    /// Feature indices from best to worst; ties keep index order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order = rank_descending(&self.scores);
        if !self.higher_is_better {
            order.reverse();
        }
        order
    }

    /// Writes `feature,method,score,rank` rows in ranking order.
    pub fn write<W: Write>(&self, names: &[String], writer: W) -> Result<()> {
        if names.len() != self.scores.len() {
            return Err(Error::DimensionMismatch {
                expected: self.scores.len(),
                got: names.len(),
            });
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["feature", "method", "score", "rank"])?;
        for (rank, &i) in self.ranking().iter().enumerate() {
            w.write_record([
                names[i].as_str(),
                self.method.as_str(),
                &self.scores[i].to_string(),
                &(rank + 1).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Indices sorted by descending value, ties broken by ascending index.
pub fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

fn check_labels(m: &FeatureMatrix) -> Result<()> {
    if m.n_samples() == 0 {
        return Err(Error::EmptyInput("feature matrix has no rows".into()));
    }
    let pos = m.positives();
    if pos == 0 || pos == m.n_samples() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Equal-width bin of every entry after min-max rescaling. `None` when the
/// column is constant.
fn bin_column(col: ArrayView1<f64>, bins: usize) -> Option<Vec<usize>> {
    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return None;
    }
    Some(
        col.iter()
            .map(|&v| (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1))
            .collect(),
    )
}

/// `bins × 2` contingency counts, indexed `[bin][label]`.
fn contingency(col: ArrayView1<f64>, labels: &[bool], bins: usize) -> Option<Vec<[f64; 2]>> {
    let assigned = bin_column(col, bins)?;
    let mut table = vec![[0.0; 2]; bins];
    for (b, &y) in assigned.iter().zip(labels) {
        table[*b][y as usize] += 1.0;
    }
    Some(table)
}

fn per_feature(m: &FeatureMatrix, bins: usize, score: impl Fn(&[[f64; 2]], f64) -> f64 + Sync) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::InvalidArgument("need at least 2 bins".into()));
    }
    check_labels(m)?;
    let n = m.n_samples() as f64;
    Ok((0..m.n_features())
        .into_par_iter()
        .map(|f| match contingency(m.data.column(f), &m.labels, bins) {
            Some(table) => score(&table, n),
            None => 0.0,
        })
        .collect())
}

/// Pearson χ² statistic of the binned feature against the label.
pub fn chi2_scores(m: &FeatureMatrix, bins: usize) -> Result<ScoreVector> {
    let scores = per_feature(m, bins, |table, n| {
        let class = [0, 1].map(|y| table.iter().map(|r| r[y]).sum::<f64>());
        let mut chi2 = 0.0;
        for row in table {
            let row_total = row[0] + row[1];
            for y in 0..2 {
                let expected = row_total * class[y] / n;
                if expected > 0.0 {
                    chi2 += (row[y] - expected).powi(2) / expected;
                }
            }
        }
        chi2
    })?;
    Ok(ScoreVector {
        method: "chi2".into(),
        scores,
        higher_is_better: true,
    })
}

/// Plug-in mutual information (nats) between the binned feature and the
/// label.
pub fn mi_scores(m: &FeatureMatrix, bins: usize) -> Result<ScoreVector> {
    let scores = per_feature(m, bins, |table, n| {
        let class = [0, 1].map(|y| table.iter().map(|r| r[y]).sum::<f64>() / n);
        let mut mi = 0.0;
        for row in table {
            let pb = (row[0] + row[1]) / n;
            for y in 0..2 {
                let pj = row[y] / n;
                if pj > 0.0 {
                    mi += pj * (pj / (pb * class[y])).ln();
                }
            }
        }
        mi.max(0.0)
    })?;
    Ok(ScoreVector {
        method: "mi".into(),
        scores,
        higher_is_better: true,
    })
}

/// ReliefF weights with Euclidean neighbours. `n_iterations` instances are
/// drawn without replacement; each contributes the range-normalized
/// difference to its `n_neighbors` nearest misses minus that to its nearest
/// hits.
pub fn relief_scores(m: &FeatureMatrix, n_neighbors: usize, n_iterations: usize, seed: u64) -> Result<ScoreVector> {
    check_labels(m)?;
    let n = m.n_samples();
    let pos = m.positives();
    if pos < 2 || n - pos < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: pos.min(n - pos),
        });
    }
    if n_neighbors == 0 || n_iterations == 0 {
        return Err(Error::InvalidArgument("n_neighbors and n_iterations must be positive".into()));
    }
    let x = &m.data;
    let d = m.n_features();
    let ranges: Vec<f64> = (0..d)
        .map(|f| {
            let col = x.column(f);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng_for(seed, &[0x5e1e_f000]));
    order.truncate(n_iterations.min(n));
    let iterations = order.len() as f64;

    let contributions: Vec<Vec<f64>> = order
        .par_iter()
        .map(|&r| {
            let row = x.row(r);
            let mut by_dist: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != r)
                .map(|j| {
                    let dist: f64 = row.iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (dist, j)
                })
                .collect();
            by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let nearest = |same: bool| -> Vec<usize> {
                by_dist
                    .iter()
                    .filter(|(_, j)| (m.labels[*j] == m.labels[r]) == same)
                    .take(n_neighbors)
                    .map(|&(_, j)| j)
                    .collect()
            };
            let (hits, misses) = (nearest(true), nearest(false));
            (0..d)
                .map(|f| {
                    if ranges[f] <= 0.0 {
                        return 0.0;
                    }
                    let diff = |js: &[usize]| {
                        js.iter().map(|&j| (row[f] - x[[j, f]]).abs()).sum::<f64>() / (js.len() as f64 * ranges[f])
                    };
                    diff(&misses) - diff(&hits)
                })
                .collect()
        })
        .collect();

    let mut scores = vec![0.0; d];
    for c in &contributions {
        for (s, v) in scores.iter_mut().zip(c) {
            *s += v;
        }
    }
    scores.iter_mut().for_each(|s| *s /= iterations);
    Ok(ScoreVector {
        method: "relief".into(),
        scores,
        higher_is_better: true,
    })
}

/// `relief_scores` with the default neighbour count and
/// `min(n, 200)` iterations.
pub fn relief_default(m: &FeatureMatrix, seed: u64) -> Result<ScoreVector> {
    relief_scores(m, DEFAULT_NEIGHBORS, m.n_samples().min(MAX_RELIEF_ITERATIONS), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(columns: Vec<Vec<f64>>, labels: Vec<bool>) -> FeatureMatrix {
        let n = labels.len();
        let d = columns.len();
        let data = Array2::from_shape_fn((n, d), |(i, j)| columns[j][i]);
        let names = (0..d).map(|j| format!("f{j}")).collect();
        FeatureMatrix::new(data, labels, names).unwrap()
    }

    fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
        let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        y[0] = true;
        y[1] = false;
        y
    }

    fn chi2_critical_99_df9() -> f64 {
        21.666
    }

    #[test]
    fn label_copy_wins_chi2_and_mi() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = random_labels(&mut rng, 200);
        let copy: Vec<f64> = y.iter().map(|&b| b as u8 as f64).collect();
        let noise: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let constant = vec![2.0; 200];
        let m = matrix(vec![noise, copy, constant], y.clone());

        let chi = chi2_scores(&m, DEFAULT_BINS).unwrap();
        assert_eq!(chi.ranking()[0], 1);
        assert!((chi.scores[1] - 200.0).abs() < 1e-9);
        assert_eq!(chi.scores[2], 0.0);

        let mi = mi_scores(&m, DEFAULT_BINS).unwrap();
        let p = y.iter().filter(|&&b| b).count() as f64 / 200.0;
        let entropy = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        assert!((mi.scores[1] - entropy).abs() < 1e-12);
        assert_eq!(mi.scores[2], 0.0);
    }

    #[test]
    fn independent_features_look_null() {
        let mut chi_ok = 0;
        let mut mi_ok = 0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = random_labels(&mut rng, 1000);
            let x: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
            let m = matrix(vec![x], y);
            chi_ok += (chi2_scores(&m, 10).unwrap().scores[0] < chi2_critical_99_df9()) as usize;
            mi_ok += (mi_scores(&m, 10).unwrap().scores[0] < 0.02) as usize;
        }
        assert!(chi_ok >= 9 && mi_ok >= 9, "{chi_ok} {mi_ok}");
    }

    #[test]
    fn relief_prefers_relevant_feature() {
        let mut wins = 0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 200;
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            // class depends on the sign product of the relevant feature and a
            // hidden partner, so no single-feature marginal separates it
            let hidden: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<bool> = a.iter().zip(&hidden).map(|(p, q)| p * q > 0.0).collect();
            let m = matrix(vec![a, b, hidden], y);
            let s = relief_default(&m, seed).unwrap();
            wins += (s.scores[0] > s.scores[1]) as usize;
        }
        assert!(wins >= 9, "{wins}");
    }

    #[test]
    fn relief_duplicate_columns_tie() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = random_labels(&mut rng, 80);
        let a: Vec<f64> = y.iter().map(|&b| b as u8 as f64 + rng.random::<f64>()).collect();
        let noise: Vec<f64> = (0..80).map(|_| rng.random()).collect();
        let m = matrix(vec![a.clone(), noise, a], y);
        let s = relief_default(&m, 3).unwrap();
        assert!((s.scores[0] - s.scores[2]).abs() < 1e-9);
    }

    #[test]
    fn relief_noise_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y = random_labels(&mut rng, 500);
        let cols: Vec<Vec<f64>> = (0..5).map(|_| (0..500).map(|_| rng.random()).collect()).collect();
        let s = relief_default(&matrix(cols, y), 1).unwrap();
        assert!(s.scores.iter().all(|v| v.abs() < 0.1), "{:?}", s.scores);
    }

    #[test]
    fn rejects_single_class() {
        let m = matrix(vec![vec![1.0, 2.0, 3.0]], vec![true; 3]);
        assert!(matches!(chi2_scores(&m, 10), Err(Error::SingleClass)));
        assert!(matches!(relief_default(&m, 0), Err(Error::SingleClass)));
        let ok = matrix(vec![vec![1.0, 2.0, 3.0]], vec![true, false, true]);
        assert!(chi2_scores(&ok, 1).is_err());
    }

    #[test]
    fn ranking_and_writer() {
        let s = ScoreVector {
            method: "chi2".into(),
            scores: vec![1.0, 3.0, 3.0, 0.5],
            higher_is_better: true,
        };
        assert_eq!(s.ranking(), vec![1, 2, 0, 3]);
        let names: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let mut buf = Vec::new();
        s.write(&names, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("feature,method,score,rank"));
        assert_eq!(text.lines().nth(1), Some("b,chi2,3,1"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn invariant_to_row_order_and_affine_maps(
            seed in any::<u64>(),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 60;
            let y = random_labels(&mut rng, n);
            let cols: Vec<Vec<f64>> = (0..3)
                .map(|_| y.iter().map(|&b| b as u8 as f64 * 0.5 + rng.random::<f64>()).collect())
                .collect();
            let m = matrix(cols.clone(), y.clone());

            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let shuffled = m.select_rows(&perm);
            for score in [chi2_scores, mi_scores] {
                let a = score(&m, 10).unwrap();
                let b = score(&shuffled, 10).unwrap();
                for (p, q) in a.scores.iter().zip(&b.scores) {
                    prop_assert!((p - q).abs() < 1e-9);
                }
            }
            // Relief draws instances by position, so compare full passes
            let a = relief_scores(&m, 5, n, 0).unwrap();
            let b = relief_scores(&shuffled, 5, n, 0).unwrap();
            for (p, q) in a.scores.iter().zip(&b.scores) {
                prop_assert!((p - q).abs() < 1e-9);
            }

            // Affine maps are applied to exactly representable values so that
            // bin boundaries cannot move under rounding.
            let grid: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..n).map(|_| rng.random_range(0..40) as f64 / 4.0).collect())
                .collect();
            let g = matrix(grid.clone(), y.clone());
            let scale = (scale * 4.0).round().max(1.0) / 4.0;
            let shift = (shift * 4.0).round() / 4.0;
            let mapped = matrix(
                grid.iter().map(|c| c.iter().map(|v| v * scale + shift).collect()).collect(),
                y,
            );
            for score in [chi2_scores, mi_scores] {
                let a = score(&g, 10).unwrap();
                let b = score(&mapped, 10).unwrap();
                for (p, q) in a.scores.iter().zip(&b.scores) {
                    prop_assert!((p - q).abs() < 1e-9, "{} {}", p, q);
                }
            }
        }
    }
}
