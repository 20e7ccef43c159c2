use std::path::Path;

use serde::Deserialize;
use shapga::classifiers::{ClassifierKind, Hyperparams};
use shapga::estimator::ShapleyGaConfig;
use shapga::ex1::{AdjustmentMode, Ex1Config, EULER_GAMMA};
use shapga::ga::GaConfig;
use shapga::valuation::{InnerProtocol, ValuationConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMethod {
    ShapleyGa,
    ShapleyExact,
    Chi2,
    Mi,
    Relief,
}

impl SelectionMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionMethod::ShapleyGa => "shapley-ga",
            SelectionMethod::ShapleyExact => "shapley-exact",
            SelectionMethod::Chi2 => "chi2",
            SelectionMethod::Mi => "mi",
            SelectionMethod::Relief => "relief",
        }
    }

    pub fn is_shapley(&self) -> bool {
        matches!(self, SelectionMethod::ShapleyGa | SelectionMethod::ShapleyExact)
    }
}

/// Every tunable of the pipeline. Loaded from TOML; unknown keys are
/// rejected so typos do not silently fall back to defaults.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,

    pub method: SelectionMethod,
    pub top_k: usize,
    pub mu: f64,
    pub max_coalition_size: usize,
    pub samples_per_size: usize,
    pub population_size: usize,
    pub fitness_floor: f64,
    pub adjustment_mode: String,
    pub ex1_gamma: f64,
    pub ex1_min_block: u64,
    pub inner_classifier: String,
    pub inner_holdout_fraction: f64,
    /// Switches the inner protocol from a holdout to k-fold when non-zero.
    pub inner_folds: usize,
    pub exact_ceiling: usize,

    pub bins: usize,
    pub relief_neighbors: usize,
    pub relief_iterations: usize,

    pub folds: usize,
    pub repeats: usize,
    pub stratified: bool,
    pub classifiers: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: 0,
            method: SelectionMethod::ShapleyGa,
            top_k: 20,
            mu: 1.0,
            max_coalition_size: 20,
            samples_per_size: 100,
            population_size: 20,
            fitness_floor: 1e-6,
            adjustment_mode: "ex1".into(),
            ex1_gamma: EULER_GAMMA,
            ex1_min_block: 5,
            inner_classifier: "logistic".into(),
            inner_holdout_fraction: 0.25,
            inner_folds: 0,
            exact_ceiling: shapga::game::DEFAULT_EXACT_CEILING,
            bins: shapga::baselines::DEFAULT_BINS,
            relief_neighbors: shapga::baselines::DEFAULT_NEIGHBORS,
            relief_iterations: shapga::baselines::MAX_RELIEF_ITERATIONS,
            folds: 5,
            repeats: 2,
            stratified: true,
            classifiers: ClassifierKind::ALL.iter().map(|k| k.name().to_string()).collect(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub method: Option<SelectionMethod>,
    pub mu: Option<f64>,
    pub max_coalition_size: Option<usize>,
    pub samples_per_size: Option<usize>,
    pub population_size: Option<usize>,
    pub top_k: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field { self.$field = v; })*
            };
        }
        take!(method, mu, max_coalition_size, samples_per_size, population_size, top_k, seed, workers);
    }

    /// Checks everything that does not depend on the input data.
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("top_k", self.top_k),
            ("max_coalition_size", self.max_coalition_size),
            ("samples_per_size", self.samples_per_size),
            ("population_size", self.population_size),
            ("bins", self.bins),
            ("relief_neighbors", self.relief_neighbors),
            ("relief_iterations", self.relief_iterations),
            ("folds", self.folds),
            ("repeats", self.repeats),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if self.classifiers.is_empty() {
            return Err(invalid("classifiers must not be empty"));
        }
        self.classifier_kinds()?;
        self.valuation()?.validate()?;
        self.adjustment()?;
        Ok(())
    }

    pub fn classifier_kinds(&self) -> Result<Vec<ClassifierKind>, CliError> {
        let mut kinds: Vec<ClassifierKind> = Vec::new();
        for name in &self.classifiers {
            let kind: ClassifierKind = name.parse()?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        Ok(kinds)
    }

    pub fn adjustment(&self) -> Result<Ex1Config, CliError> {
        let mode: AdjustmentMode = self.adjustment_mode.parse()?;
        if !(self.ex1_gamma >= 0.0 && self.ex1_gamma.is_finite()) {
            return Err(invalid("ex1_gamma must be finite and non-negative"));
        }
        Ok(Ex1Config {
            mode,
            gamma: self.ex1_gamma,
            min_block: self.ex1_min_block.max(1),
        })
    }

    pub fn valuation(&self) -> Result<ValuationConfig, CliError> {
        let protocol = if self.inner_folds > 0 {
            InnerProtocol::KFold(self.inner_folds)
        } else {
            InnerProtocol::Holdout(self.inner_holdout_fraction)
        };
        Ok(ValuationConfig {
            mu: self.mu,
            classifier: self.inner_classifier.parse()?,
            hyperparams: Hyperparams::default(),
            protocol,
            seed: shapga::seed::derive_seed(self.seed, &[0x76616c]),
        })
    }

    pub fn shapley_ga(&self) -> Result<ShapleyGaConfig, CliError> {
        Ok(ShapleyGaConfig {
            ga: GaConfig {
                population_size: self.population_size,
                samples_per_size: self.samples_per_size,
                max_coalition_size: self.max_coalition_size,
                seed: shapga::seed::derive_seed(self.seed, &[0x6761]),
                fitness_floor: self.fitness_floor,
            },
            adjust: self.adjustment()?,
        })
    }
}
