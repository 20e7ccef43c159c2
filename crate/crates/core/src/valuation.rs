//! Classifier-backed characteristic function: a coalition is worth the
//! blend of sensitivity and specificity a classifier reaches using only
//! that coalition's features.

use std::sync::atomic::{AtomicU64, Ordering};

use dashmap::DashMap;

use crate::classifiers::{self, ClassifierKind, Confusion, Hyperparams, MetricsReport};
use crate::dataset::{stratified_holdout, stratified_kfold, FeatureMatrix};
use crate::error::{Error, Result};
use crate::game::{Coalition, Game};
use crate::seed;

/// Default roster of sensitivity/specificity mixing weights.
pub const DEFAULT_MU_VALUES: [f64; 3] = [0.5, 1.0, 3.5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerProtocol {
    /// One stratified split; the fraction goes to validation.
    Holdout(f64),
    /// Stratified k-fold with confusion counts pooled over folds.
    KFold(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValuationConfig {
    /// Weight of specificity relative to sensitivity.
    pub mu: f64,
    pub classifier: ClassifierKind,
    pub hyperparams: Hyperparams,
    pub protocol: InnerProtocol,
    pub seed: u64,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        ValuationConfig {
            mu: 1.0,
            classifier: ClassifierKind::Logistic,
            hyperparams: Hyperparams::default(),
            protocol: InnerProtocol::Holdout(0.25),
            seed: 0,
        }
    }
}

impl ValuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be finite and non-negative, got {}", self.mu)));
        }
        match self.protocol {
            InnerProtocol::Holdout(f) if !(f > 0.0 && f < 1.0) => Err(Error::InvalidArgument(format!(
                "holdout fraction must lie in (0, 1), got {f}"
            ))),
            InnerProtocol::KFold(k) if k < 2 => Err(Error::InvalidArgument("inner fold count must be at least 2".into())),
            _ => Ok(()),
        }
    }
}

/// `((1 − FNR) + μ(1 − FPR)) / (1 + μ)`.
pub fn blend(fnr: f64, fpr: f64, mu: f64) -> f64 {
    ((1.0 - fnr) + mu * (1.0 - fpr)) / (1.0 + mu)
}

pub fn blend_metrics(m: &MetricsReport, mu: f64) -> f64 {
    blend(m.fnr, m.fpr, mu)
}

/// (train, validation) row sets for the configured protocol.
pub fn inner_splits(labels: &[bool], cfg: &ValuationConfig) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    match cfg.protocol {
        InnerProtocol::Holdout(f) => Ok(vec![stratified_holdout(labels, f, cfg.seed)?]),
        InnerProtocol::KFold(k) => {
            let plan = stratified_kfold(labels, k, 1, seed::derive_seed(cfg.seed, &[0x696e_6e72]))?;
            Ok(plan.splits().into_iter().map(|s| (s.train, s.test)).collect())
        }
    }
}

fn value_with_splits(
    data: &FeatureMatrix,
    coalition: &Coalition,
    cfg: &ValuationConfig,
    splits: &[(Vec<usize>, Vec<usize>)],
) -> Result<f64> {
    if coalition.capacity() != data.n_features() {
        return Err(Error::DimensionMismatch {
            expected: data.n_features(),
            got: coalition.capacity(),
        });
    }
    if coalition.is_empty() {
        return Ok(0.0);
    }
    let columns = coalition.members();
    let x = data.select_columns(&columns);
    let mut pooled = Confusion::default();
    for (k, (train, valid)) in splits.iter().enumerate() {
        if valid.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        let train_m = x.select_rows(train);
        let valid_m = x.select_rows(valid);
        let model = classifiers::train(
            cfg.classifier,
            train_m.view(),
            &train_m.labels,
            &cfg.hyperparams,
            seed::derive_seed(cfg.seed, &[k as u64]),
        )?;
        let report = classifiers::evaluate(&model, valid_m.view(), &valid_m.labels)?;
        pooled = pooled.merge(&report.confusion);
    }
    let report = MetricsReport::from_confusion(pooled)?;
    Ok(blend_metrics(&report, cfg.mu))
}

/// `ν(T)` for the feature columns in `coalition`. The empty coalition is
/// worth 0 without training anything.
pub fn coalition_value(data: &FeatureMatrix, coalition: &Coalition, cfg: &ValuationConfig) -> Result<f64> {
    cfg.validate()?;
    if coalition.is_empty() {
        return Ok(0.0);
    }
    let splits = inner_splits(&data.labels, cfg)?;
    value_with_splits(data, coalition, cfg, &splits)
}

/// Memo table keyed by coalition bit pattern. Safe for concurrent use;
/// racing writers store identical values.
#[derive(Debug, Default)]
pub struct ValuationCache {
    values: DashMap<Coalition, f64>,
    hits: AtomicU64,
    misses: AtomicU64,
    pinned: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheStats {
    pub entries: usize,
    pub hits: u64,
    pub misses: u64,
    /// Lookups of the empty coalition, answered without a table entry.
    pub pinned_hits: u64,
}

impl ValuationCache {
    pub fn new() -> Self {
        ValuationCache::default()
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            entries: self.values.len(),
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            pinned_hits: self.pinned.load(Ordering::Relaxed),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn get_or_compute(&self, coalition: &Coalition, compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
        if coalition.is_empty() {
            self.pinned.fetch_add(1, Ordering::Relaxed);
            return Ok(0.0);
        }
        if let Some(v) = self.values.get(coalition) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*v);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = compute()?;
        self.values.insert(coalition.clone(), v);
        Ok(v)
    }
}

pub fn cached_value(
    cache: &ValuationCache,
    data: &FeatureMatrix,
    coalition: &Coalition,
    cfg: &ValuationConfig,
) -> Result<f64> {
    cache.get_or_compute(coalition, || coalition_value(data, coalition, cfg))
}

/// The classifier-backed game over the columns of a feature matrix, with
/// the inner splits fixed up front and a shared cache.
pub struct ClassifierGame<'a> {
    data: &'a FeatureMatrix,
    cfg: ValuationConfig,
    splits: Vec<(Vec<usize>, Vec<usize>)>,
    cache: ValuationCache,
}

impl<'a> ClassifierGame<'a> {
    pub fn new(data: &'a FeatureMatrix, cfg: ValuationConfig) -> Result<Self> {
        cfg.validate()?;
        let splits = inner_splits(&data.labels, &cfg)?;
        for (train, valid) in &splits {
            if valid.is_empty() {
                return Err(Error::EmptyEvaluation);
            }
            let pos = train.iter().filter(|&&i| data.labels[i]).count();
            if pos == 0 || pos == train.len() {
                return Err(Error::SingleClass);
            }
        }
        Ok(ClassifierGame {
            data,
            cfg,
            splits,
            cache: ValuationCache::new(),
        })
    }

    pub fn config(&self) -> &ValuationConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &ValuationCache {
        &self.cache
    }
}

impl Game for ClassifierGame<'_> {
    fn n_players(&self) -> usize {
        self.data.n_features()
    }

    fn value(&self, coalition: &Coalition) -> Result<f64> {
        self.cache
            .get_or_compute(coalition, || value_with_splits(self.data, coalition, &self.cfg, &self.splits))
    }
}
