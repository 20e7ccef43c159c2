//! Extreme-value (Gumbel) correction of GA sample means.
//!
//! GA samples are modeled as maxima over blocks of `M` draws of the
//! underlying marginal-contribution distribution, so their mean overshoots.
//! Method-of-moments fitting of the Gumbel law `exp(−exp(−(y−u)/α))`
//! recovers the location `u`, used as the de-biased stratum mean.

use crate::error::{Error, Result};
use crate::ga::SampleSet;

/// Euler–Mascheroni constant, the Gumbel mean offset in units of scale.
pub const EULER_GAMMA: f64 = 0.5772;
/// Gumbel variance in units of squared scale (`π²/6`).
pub const GUMBEL_VARIANCE_FACTOR: f64 = 1.645;
/// Saturation value for coalition counts that overflow `u64`.
pub const COUNT_SENTINEL: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjustmentMode {
    Ex1,
    Raw,
}

impl std::str::FromStr for AdjustmentMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ex1" => Ok(AdjustmentMode::Ex1),
            "raw" => Ok(AdjustmentMode::Raw),
            other => Err(Error::InvalidArgument(format!("unknown adjustment mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ex1Config {
    pub mode: AdjustmentMode,
    pub gamma: f64,
    /// Smallest block size for which the maximum model is trusted.
    pub min_block: u64,
}

impl Default for Ex1Config {
    fn default() -> Self {
        Ex1Config {
            mode: AdjustmentMode::Ex1,
            gamma: EULER_GAMMA,
            min_block: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ex1Fit {
    /// Location `u`, the estimate of the underlying mean.
    pub location: f64,
    /// Scale `α`, the estimate of the underlying standard deviation.
    pub scale: f64,
    pub block_size: u64,
    pub gamma: f64,
}

impl Ex1Fit {
    pub fn variance(&self) -> f64 {
        self.scale * self.scale
    }
}

/// `C(n, k)` saturating at [`COUNT_SENTINEL`].
pub fn binomial_saturating(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for j in 1..=k {
        // c·(n−k+j) is divisible by j at every step
        c = c * (n - k + j) as u128 / j as u128;
        if c > COUNT_SENTINEL as u128 {
            return COUNT_SENTINEL;
        }
    }
    c as u64
}

/// Block size `M = ⌊C(n_players − 1, size) / n_samples⌋`, at least 1.
pub fn block_size(n_players: usize, size: usize, n_samples: usize) -> u64 {
    let n_samples = n_samples.max(1) as u64;
    let count = binomial_saturating(n_players.saturating_sub(1) as u64, size as u64);
    (count / n_samples).max(1)
}

/// Method-of-moments Gumbel fit:
/// `α = sqrt(s² / 1.645)`, `u = x̄ − γ·α`, with `s²` the unbiased sample
/// variance.
pub fn fit_ex1(samples: &[f64], gamma: f64) -> Result<Ex1Fit> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if samples.iter().all(|&x| x == samples[0]) {
        return Ok(Ex1Fit {
            location: samples[0],
            scale: 0.0,
            block_size: 1,
            gamma,
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let scale = (var / GUMBEL_VARIANCE_FACTOR).sqrt();
    Ok(Ex1Fit {
        location: mean - gamma * scale,
        scale,
        block_size: 1,
        gamma,
    })
}

/// Stratum mean of a sample set, EX1-corrected when the block size is
/// large enough and the set has at least two samples.
pub fn adjusted_mean(set: &SampleSet, cfg: &Ex1Config) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyInput("sample set".into()));
    }
    let marginals = set.marginals();
    let raw = marginals.iter().sum::<f64>() / marginals.len() as f64;
    if cfg.mode == AdjustmentMode::Raw || marginals.len() < 2 {
        return Ok(raw);
    }
    let m = block_size(set.n_players, set.size, set.len());
    if m < cfg.min_block {
        return Ok(raw);
    }
    let mut fit = fit_ex1(&marginals, cfg.gamma)?;
    fit.block_size = m;
    Ok(fit.location)
}
