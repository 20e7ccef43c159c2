//! The 20 summary statistics computed for every coefficient vector.
//!
//! All statistics are computed from the sorted copy of the input, so the
//! result does not depend on sample order at all.

use crate::error::{Error, Result};

pub const N_STATS: usize = 20;
const HIST_BINS: usize = 32;
const ZERO_CLAMP: f64 = 1e-12;

/// Short names, in output order.
pub const STAT_NAMES: [&str; N_STATS] = [
    "mean",
    "mode",
    "median",
    "max",
    "min",
    "range",
    "variance",
    "std",
    "mu3",
    "mu4",
    "cv",
    "kurtosis",
    "skewness",
    "hmean",
    "iqr",
    "shannon_entropy",
    "log_energy_entropy",
    "n_above_max_2",
    "n_above_max_3",
    "n_above_max_4",
];

/// Quantile with linear interpolation between order statistics
/// (position `q·(n−1)`).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn histogram(sorted: &[f64]) -> Option<(Vec<usize>, f64, f64)> {
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let width = (max - min) / HIST_BINS as f64;
    if !(width > 0.0) {
        return None;
    }
    let mut counts = vec![0usize; HIST_BINS];
    for &v in sorted {
        let b = (((v - min) / width) as usize).min(HIST_BINS - 1);
        counts[b] += 1;
    }
    Some((counts, min, width))
}

/// Computes, in order: mean, mode, median, max, min, range, variance, std,
/// third and fourth central moments, coefficient of variation, kurtosis,
/// skewness, harmonic mean, interquartile range, Shannon entropy,
/// log-energy entropy, and the counts of `|x| > max|x|/d` for d = 2, 3, 4.
///
/// Moments are population-normalized. Kurtosis is `μ₄/σ⁴` (not excess).
/// Ratios with a zero denominator (cv, kurtosis, skewness) are 0. The mode
/// is the center of the fullest of 32 equal-width bins, and the Shannon
/// entropy uses the same histogram. The harmonic mean is taken over `|x|`
/// clamped below at 1e-12, as is `x²` inside the log-energy entropy.
pub fn stat_features(v: &[f64]) -> Result<[f64; N_STATS]> {
    if v.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteSignal);
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;

    let mean = s.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in &s {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (variance, mu3, mu4) = (m2 / n, m3 / n, m4 / n);
    let std = variance.sqrt();
    let min = s[0];
    let max = s[s.len() - 1];

    let hist = histogram(&s);
    let mode = match &hist {
        Some((counts, lo, width)) => {
            let best = counts
                .iter()
                .enumerate()
                .fold(0, |b, (k, &c)| if c > counts[b] { k } else { b });
            lo + (best as f64 + 0.5) * width
        }
        None => min,
    };
    let shannon = match &hist {
        Some((counts, _, _)) => -counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum::<f64>(),
        None => 0.0,
    };

    let guarded = |num: f64, den: f64| if den.abs() <= ZERO_CLAMP { 0.0 } else { num / den };
    let cv = guarded(std, mean.abs());
    let kurtosis = guarded(mu4, variance * variance);
    let skewness = guarded(mu3, variance * std);

    let hmean = n / s.iter().map(|x| 1.0 / x.abs().max(ZERO_CLAMP)).sum::<f64>();
    let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
    let log_energy = s.iter().map(|x| (x * x).max(ZERO_CLAMP).ln()).sum::<f64>();

    let peak = min.abs().max(max.abs());
    let count_above = |d: f64| s.iter().filter(|x| x.abs() > peak / d).count() as f64;

    Ok([
        mean,
        mode,
        quantile(&s, 0.5),
        max,
        min,
        max - min,
        variance,
        std,
        mu3,
        mu4,
        cv,
        kurtosis,
        skewness,
        hmean,
        iqr,
        shannon,
        log_energy,
        count_above(2.0),
        count_above(3.0),
        count_above(4.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stat(v: &[f64], name: &str) -> f64 {
        let k = STAT_NAMES.iter().position(|&s| s == name).unwrap();
        stat_features(v).unwrap()[k]
    }

    #[test]
    fn hand_computed_values() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(stat(&v, "mean"), 2.5);
        assert_eq!(stat(&v, "median"), 2.5);
        assert_eq!(stat(&v, "max"), 4.0);
        assert_eq!(stat(&v, "min"), 1.0);
        assert_eq!(stat(&v, "range"), 3.0);
        assert_eq!(stat(&v, "variance"), 1.25);
        assert_eq!(stat(&v, "iqr"), 1.5);
        assert_eq!(stat(&v, "mu3"), 0.0);
        assert!((stat(&v, "hmean") - 4.0 / (1.0 + 0.5 + 1.0 / 3.0 + 0.25)).abs() < 1e-12);
        // four values spread over 32 bins, each alone: entropy ln 4
        assert!((stat(&v, "shannon_entropy") - 4f64.ln()).abs() < 1e-12);
        assert!((stat(&v, "log_energy_entropy") - (4.0f64 * 9.0 * 16.0).ln()).abs() < 1e-12);
        assert!((stat(&v, "kurtosis") - (0.25 * (2.25f64.powi(2) * 2.0 + 0.25f64.powi(2) * 2.0)) / 1.5625).abs() < 1e-12);
    }

    #[test]
    fn constant_vector_degenerates_cleanly() {
        let v = [5.0, 5.0, 5.0];
        let f = stat_features(&v).unwrap();
        assert!(f.iter().all(|x| x.is_finite()));
        assert_eq!(stat(&v, "variance"), 0.0);
        assert_eq!(stat(&v, "skewness"), 0.0);
        assert_eq!(stat(&v, "kurtosis"), 0.0);
        assert_eq!(stat(&v, "range"), 0.0);
        assert_eq!(stat(&v, "mode"), 5.0);
        assert_eq!(stat(&v, "shannon_entropy"), 0.0);
        for name in ["n_above_max_2", "n_above_max_3", "n_above_max_4"] {
            assert_eq!(stat(&v, name), 3.0);
        }
        let zeros = stat_features(&[0.0, 0.0]).unwrap();
        assert!(zeros.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn threshold_counts_are_strict_on_magnitude() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(stat(&v, "n_above_max_2"), 2.0);
        assert_eq!(stat(&v, "n_above_max_3"), 3.0);
        assert_eq!(stat(&v, "n_above_max_4"), 3.0);
        assert_eq!(stat(&[-4.0, 1.0, 3.0], "n_above_max_2"), 2.0);
    }

    #[test]
    fn mode_picks_fullest_bin() {
        let v = [0.0, 10.0, 10.0, 10.0, 5.0];
        let width = 10.0 / 32.0;
        assert!((stat(&v, "mode") - (10.0 - width / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_input() {
        assert!(stat_features(&[]).is_err());
        assert!(stat_features(&[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn order_free_and_well_behaved(
            mut v in proptest::collection::vec(-1e3f64..1e3, 2..80),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let a = stat_features(&v).unwrap();
            v.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = stat_features(&v).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            prop_assert!(a.iter().all(|x| x.is_finite()));
            prop_assert!(a[15] >= 0.0);
        }
    }
}
