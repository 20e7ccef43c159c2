//! R-peak detection and the heart-rate signal built from R-R intervals.
//!
//! The detector squares the first difference of the ECG, smooths it over
//! 20 ms, and flags excursions above an adaptive threshold: the larger of
//! `median + k·MAD` and a fraction of the envelope maximum, both taken over
//! a 2 s window around each half-second block. Each excursion is mapped to
//! the largest ECG sample within 60 ms, and peaks closer than the 200 ms
//! refractory period keep only the taller one.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RPeakConfig {
    pub smoothing_s: f64,
    pub window_s: f64,
    pub mad_multiplier: f64,
    pub relative_floor: f64,
    pub search_s: f64,
    pub refractory_s: f64,
}

impl Default for RPeakConfig {
    fn default() -> Self {
        RPeakConfig {
            smoothing_s: 0.02,
            window_s: 2.0,
            mad_multiplier: 6.0,
            relative_floor: 0.35,
            search_s: 0.06,
            refractory_s: 0.2,
        }
    }
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn envelope(ecg: &[f64], width: usize) -> Vec<f64> {
    let n = ecg.len();
    let sq: Vec<f64> = (0..n)
        .map(|k| {
            let d = if k + 1 < n { ecg[k + 1] - ecg[k] } else { 0.0 };
            d * d
        })
        .collect();
    let half = width / 2;
    let mut prefix = vec![0.0; n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] + sq[k];
    }
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / width as f64
        })
        .collect()
}

pub fn detect_rpeaks(ecg: &[f64], fs: f64) -> Result<Vec<usize>> {
    detect_rpeaks_with(ecg, fs, &RPeakConfig::default())
}

/// Ascending sample indices of detected R-peaks. A flat signal yields an
/// empty list.
pub fn detect_rpeaks_with(ecg: &[f64], fs: f64, cfg: &RPeakConfig) -> Result<Vec<usize>> {
    if !(100.0..=1000.0).contains(&fs) {
        return Err(Error::InvalidArgument(format!("sampling rate {fs} Hz outside 100..=1000")));
    }
    let min_len = (2.0 * fs).ceil() as usize;
    if ecg.len() < min_len {
        return Err(Error::SignalTooShort {
            len: ecg.len(),
            min: min_len,
        });
    }
    if ecg.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSignal);
    }
    let n = ecg.len();
    let secs = |s: f64| ((s * fs).round() as usize).max(1);
    let env = envelope(ecg, secs(cfg.smoothing_s));

    let block = secs(0.5);
    let radius = secs(cfg.window_s / 2.0);
    let thresholds: Vec<f64> = (0..n.div_ceil(block))
        .map(|b| {
            let center = b * block + block / 2;
            let lo = center.saturating_sub(radius);
            let hi = (center + radius).min(n);
            let mut window = env[lo..hi].to_vec();
            let peak = window.iter().copied().fold(0.0, f64::max);
            let med = median_of(&mut window);
            let mut dev: Vec<f64> = window.iter().map(|v| (v - med).abs()).collect();
            let mad = median_of(&mut dev);
            (med + cfg.mad_multiplier * mad).max(cfg.relative_floor * peak)
        })
        .collect();

    let search = secs(cfg.search_s);
    let refractory = secs(cfg.refractory_s);
    let mut peaks: Vec<usize> = Vec::new();
    let mut k = 0;
    while k < n {
        if env[k] > thresholds[k / block] {
            let start = k;
            while k < n && env[k] > thresholds[k / block] {
                k += 1;
            }
            let lo = start.saturating_sub(search);
            let hi = (k + search).min(n);
            let r = (lo..hi).fold(lo, |best, j| if ecg[j] > ecg[best] { j } else { best });
            match peaks.last_mut() {
                Some(last) if r - (*last).min(r) < refractory => {
                    if ecg[r] > ecg[*last] {
                        *last = r;
                    }
                }
                _ => peaks.push(r),
            }
        } else {
            k += 1;
        }
    }
    peaks.dedup();
    Ok(peaks)
}

/// Instantaneous heart rate in Hz, one value per R-R interval.
pub fn hrv_signal(peaks: &[usize], fs: f64) -> Result<Vec<f64>> {
    if peaks.len() < 3 {
        return Err(Error::TooFewPeaks { found: peaks.len() });
    }
    if !(fs > 0.0) {
        return Err(Error::InvalidArgument("sampling rate must be positive".into()));
    }
    peaks
        .windows(2)
        .map(|w| {
            if w[1] <= w[0] {
                Err(Error::InvalidArgument("R-peak indices must be strictly increasing".into()))
            } else {
                Ok(fs / (w[1] - w[0]) as f64)
            }
        })
        .collect()
}
