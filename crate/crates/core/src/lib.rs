//! Shapley-value feature selection for binary classification.
//!
//! Features are players in a cooperative game whose characteristic function
//! is the cross-validated quality of a classifier trained on the coalition.
//! Shapley values are estimated by sampling coalitions of each size with a
//! genetic algorithm, de-biasing the per-size means under an extreme-value
//! model, and averaging over sizes up to a cap.

pub mod baselines;
pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod ex1;
pub mod ga;
pub mod game;
pub mod games;
pub mod seed;
pub mod signal;
pub mod valuation;

pub use error::{Error, Result};
pub use estimator::{estimate_shapley_ga, exact_report, ShapleyGaConfig, ShapleyReport};
pub use game::{exact_shapley, truncated_shapley, Coalition, CountingGame, Game};
