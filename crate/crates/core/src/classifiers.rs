//! Small deterministic binary classifiers and the metrics computed from
//! their predictions. The positive class is a true alarm.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    Logistic,
    NearestCentroid,
    RusBoostLite,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Logistic,
        ClassifierKind::NearestCentroid,
        ClassifierKind::RusBoostLite,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::NearestCentroid => "nearest-centroid",
            ClassifierKind::RusBoostLite => "rusboost-lite",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "logistic" => Ok(ClassifierKind::Logistic),
            "nearest-centroid" | "centroid" => Ok(ClassifierKind::NearestCentroid),
            "rusboost-lite" | "rusboost" => Ok(ClassifierKind::RusBoostLite),
            other => Err(Error::InvalidArgument(format!("unknown classifier {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub l2_penalty: f64,
    pub max_iterations: usize,
    pub boosting_rounds: usize,
    pub learning_rate: f64,
    pub tree_depth: usize,
    pub threshold: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            l2_penalty: 1e-2,
            max_iterations: 300,
            boosting_rounds: 50,
            learning_rate: 1.0,
            tree_depth: 2,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TreeNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn predict(&self, x: ArrayView1<f64>) -> f64 {
        match self {
            TreeNode::Leaf(v) => *v,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Params {
    Logistic { weights: Array1<f64>, bias: f64 },
    NearestCentroid { positive: Array1<f64>, negative: Array1<f64> },
    Boosted { trees: Vec<(TreeNode, f64)> },
}

/// A trained classifier. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    kind: ClassifierKind,
    params: Params,
    threshold: f64,
    n_features: usize,
}

impl BinaryModel {
    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Score in `[0, 1]`; higher means more likely positive.
    pub fn score(&self, x: ArrayView1<f64>) -> f64 {
        match &self.params {
            Params::Logistic { weights, bias } => sigmoid(weights.dot(&x) + bias),
            Params::NearestCentroid { positive, negative } => {
                let dp = distance(x, positive.view());
                let dn = distance(x, negative.view());
                if dp + dn == 0.0 {
                    0.5
                } else {
                    dn / (dp + dn)
                }
            }
            Params::Boosted { trees } => {
                let total: f64 = trees.iter().map(|(_, a)| a).sum();
                let vote: f64 = trees.iter().map(|(t, a)| a * t.predict(x)).sum();
                (vote / total + 1.0) / 2.0
            }
        }
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> bool {
        self.score(x) >= self.threshold
    }

    pub fn scores(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        Ok(x.rows().into_iter().map(|r| self.score(r)).collect())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn check_training_data(x: ArrayView2<f64>, y: &[bool]) -> Result<(usize, usize)> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    for ((r, c), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                row: r,
                column: c.to_string(),
            });
        }
    }
    let pos = y.iter().filter(|&&l| l).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    if pos < 2 || neg < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: pos.min(neg),
        });
    }
    Ok((pos, neg))
}

/// Trains a classifier. Deterministic given `seed`.
pub fn train(kind: ClassifierKind, x: ArrayView2<f64>, y: &[bool], hp: &Hyperparams, seed: u64) -> Result<BinaryModel> {
    let (pos, neg) = check_training_data(x, y)?;
    let params = match kind {
        ClassifierKind::Logistic => train_logistic(x, y, pos, neg, hp),
        ClassifierKind::NearestCentroid => train_centroid(x, y),
        ClassifierKind::RusBoostLite => train_rusboost(x, y, hp, seed),
    };
    Ok(BinaryModel {
        kind,
        params,
        threshold: hp.threshold,
        n_features: x.ncols(),
    })
}

/// Class-balanced, L2-penalized logistic regression by batch gradient
/// descent with a step of `1/L` for the gradient's Lipschitz bound `L`.
fn train_logistic(x: ArrayView2<f64>, y: &[bool], pos: usize, neg: usize, hp: &Hyperparams) -> Params {
    let n = x.nrows();
    let d = x.ncols();
    let w_pos = n as f64 / (2.0 * pos as f64);
    let w_neg = n as f64 / (2.0 * neg as f64);
    let sample_weight: Vec<f64> = y.iter().map(|&l| if l { w_pos } else { w_neg }).collect();
    let target: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();

    let trace: f64 = 1.0 + x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let lipschitz = 0.25 * w_pos.max(w_neg) * trace + hp.l2_penalty;
    let step = 1.0 / lipschitz;

    // The inner loop runs once per coalition evaluation, so it works on a
    // contiguous row-major copy with plain slices.
    let xs = x.as_standard_layout();
    let data = xs.as_slice().expect("standard layout is contiguous");
    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let mut grad = vec![0.0; d];
    for _ in 0..hp.max_iterations {
        grad.fill(0.0);
        let mut grad_bias = 0.0;
        for i in 0..n {
            let row = &data[i * d..(i + 1) * d];
            let z = row.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>() + bias;
            let residual = sample_weight[i] * (sigmoid(z) - target[i]) / n as f64;
            for (g, v) in grad.iter_mut().zip(row) {
                *g += residual * v;
            }
            grad_bias += residual;
        }
        for (g, w) in grad.iter_mut().zip(&weights) {
            *g += hp.l2_penalty * w;
        }
        let norm = (grad.iter().map(|g| g * g).sum::<f64>() + grad_bias * grad_bias).sqrt();
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= step * g;
        }
        bias -= step * grad_bias;
        if norm < 1e-8 {
            break;
        }
    }
    Params::Logistic {
        weights: Array1::from(weights),
        bias,
    }
}

fn train_centroid(x: ArrayView2<f64>, y: &[bool]) -> Params {
    let d = x.ncols();
    let mut positive = Array1::<f64>::zeros(d);
    let mut negative = Array1::<f64>::zeros(d);
    let (mut np, mut nn) = (0.0, 0.0);
    for (row, &l) in x.rows().into_iter().zip(y) {
        if l {
            positive += &row;
            np += 1.0;
        } else {
            negative += &row;
            nn += 1.0;
        }
    }
    positive /= np;
    negative /= nn;
    Params::NearestCentroid { positive, negative }
}

/// Discrete AdaBoost over shallow trees; every round fits on all minority
/// rows plus an equal-size random subset of the majority class.
fn train_rusboost(x: ArrayView2<f64>, y: &[bool], hp: &Hyperparams, seed: u64) -> Params {
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let minority_label = y.iter().filter(|&&l| l).count() * 2 <= n;
    let minority: Vec<usize> = (0..n).filter(|&i| y[i] == minority_label).collect();
    let majority: Vec<usize> = (0..n).filter(|&i| y[i] != minority_label).collect();
    let sign: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

    let mut weights = vec![1.0 / n as f64; n];
    let mut trees = Vec::new();
    let mut fallback = None;
    for _ in 0..hp.boosting_rounds.max(1) {
        let take = minority.len().min(majority.len());
        let mut rows = minority.clone();
        rows.extend(index::sample(&mut rng, majority.len(), take).into_iter().map(|k| majority[k]));
        rows.sort_unstable();

        let tree = fit_tree(x, &sign, &weights, &rows, hp.tree_depth);
        let predictions: Vec<f64> = x.rows().into_iter().map(|r| tree.predict(r)).collect();
        let total: f64 = weights.iter().sum();
        let err: f64 = (0..n).filter(|&i| predictions[i] != sign[i]).map(|i| weights[i]).sum::<f64>() / total;
        if err >= 0.5 {
            fallback.get_or_insert(tree);
            continue;
        }
        let err = err.max(1e-10);
        let alpha = hp.learning_rate * 0.5 * ((1.0 - err) / err).ln();
        for i in 0..n {
            weights[i] *= (-alpha * sign[i] * predictions[i]).exp();
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        trees.push((tree, alpha));
        if err <= 1e-10 {
            break;
        }
    }
    if trees.is_empty() {
        trees.push((fallback.expect("at least one round ran"), 1.0));
    }
    Params::Boosted { trees }
}

fn leaf(sign: &[f64], weights: &[f64], rows: &[usize]) -> TreeNode {
    let balance: f64 = rows.iter().map(|&i| sign[i] * weights[i]).sum();
    TreeNode::Leaf(if balance >= 0.0 { 1.0 } else { -1.0 })
}

fn gini(pos: f64, neg: f64) -> f64 {
    let total = pos + neg;
    if total <= 0.0 {
        0.0
    } else {
        let p = pos / total;
        total * 2.0 * p * (1.0 - p)
    }
}

/// Weighted-Gini tree of limited depth over `rows`.
fn fit_tree(x: ArrayView2<f64>, sign: &[f64], weights: &[f64], rows: &[usize], depth: usize) -> TreeNode {
    let (mut wp, mut wn) = (0.0, 0.0);
    for &i in rows {
        if sign[i] > 0.0 {
            wp += weights[i];
        } else {
            wn += weights[i];
        }
    }
    if depth == 0 || wp == 0.0 || wn == 0.0 {
        return leaf(sign, weights, rows);
    }
    let parent = gini(wp, wn);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = rows.to_vec();
    for f in 0..x.ncols() {
        order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]).then(a.cmp(&b)));
        let (mut lp, mut ln) = (0.0, 0.0);
        for k in 0..order.len() - 1 {
            let i = order[k];
            if sign[i] > 0.0 {
                lp += weights[i];
            } else {
                ln += weights[i];
            }
            let (a, b) = (x[[i, f]], x[[order[k + 1], f]]);
            if a == b {
                continue;
            }
            let impurity = gini(lp, ln) + gini(wp - lp, wn - ln);
            if impurity < parent - 1e-15 && best.is_none_or(|(bi, _, _)| impurity < bi) {
                best = Some((impurity, f, 0.5 * (a + b)));
            }
        }
    }
    match best {
        None => leaf(sign, weights, rows),
        Some((_, feature, threshold)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[[i, feature]] <= threshold);
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(fit_tree(x, sign, weights, &l, depth - 1)),
                right: Box::new(fit_tree(x, sign, weights, &r, depth - 1)),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_negative: usize,
    pub false_positive: usize,
    pub true_negative: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Confusion {
        let mut c = Confusion::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => c.true_positive += 1,
                (false, true) => c.false_negative += 1,
                (true, false) => c.false_positive += 1,
                (false, false) => c.true_negative += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.true_positive + self.false_negative + self.false_positive + self.true_negative
    }

    pub fn merge(&self, other: &Confusion) -> Confusion {
        Confusion {
            true_positive: self.true_positive + other.true_positive,
            false_negative: self.false_negative + other.false_negative,
            false_positive: self.false_positive + other.false_positive,
            true_negative: self.true_negative + other.true_negative,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Rates derived from a confusion table. A rate whose class is absent from
/// the evaluation set is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub fnr: f64,
    pub fpr: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
}

impl MetricsReport {
    pub fn from_confusion(confusion: Confusion) -> Result<Self> {
        if confusion.total() == 0 {
            return Err(Error::EmptyEvaluation);
        }
        let fnr = ratio(confusion.false_negative, confusion.true_positive + confusion.false_negative);
        let fpr = ratio(confusion.false_positive, confusion.false_positive + confusion.true_negative);
        Ok(MetricsReport {
            fnr,
            fpr,
            sensitivity: 1.0 - fnr,
            specificity: 1.0 - fpr,
            accuracy: ratio(confusion.true_positive + confusion.true_negative, confusion.total()),
            confusion,
        })
    }
}

pub fn evaluate(model: &BinaryModel, x: ArrayView2<f64>, y: &[bool]) -> Result<MetricsReport> {
    if x.nrows() == 0 {
        return Err(Error::EmptyEvaluation);
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let predicted: Vec<bool> = model.scores(x)?.into_iter().map(|s| s >= model.threshold).collect();
    MetricsReport::from_confusion(Confusion::from_predictions(&predicted, y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Scores `>= threshold` are called positive. The first point uses `+∞`.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC curve over every distinct score and its trapezoidal area. Tied
/// scores move the curve diagonally in one step.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if let Some(k) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite {
            row: k,
            column: "score".into(),
        });
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut k = 0;
    while k < order.len() {
        let threshold = scores[order[k]];
        while k < order.len() && scores[order[k]] == threshold {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let prev = *points.last().expect("non-empty");
        let point = RocPoint {
            threshold,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        };
        auc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / 2.0;
        points.push(point);
    }
    Ok(RocCurve { points, auc })
}
