//! Periodized orthogonal Daubechies DWT.

use crate::error::{Error, Result};

// Scaling filters with full double precision, ordered as in the usual
// reconstruction low-pass convention.
const DB4: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_08,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

const DB8: [f64; 16] = [
    0.054_415_842_243_104_01,
    0.312_871_590_914_299_97,
    0.675_630_736_297_289_8,
    0.585_354_683_654_206_7,
    -0.015_829_105_256_349_306,
    -0.284_015_542_961_546_93,
    0.000_472_484_573_913_282_8,
    0.128_747_426_620_478_46,
    -0.017_369_301_001_807_546,
    -0.044_088_253_930_794_75,
    0.013_981_027_917_398_282,
    0.008_746_094_047_405_777,
    -0.004_870_352_993_451_574,
    -0.000_391_740_373_376_947,
    0.000_675_449_406_450_569_4,
    -0.000_117_476_784_124_769_53,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wavelet {
    Db4,
    Db8,
}

impl Wavelet {
    pub fn lowpass(&self) -> &'static [f64] {
        match self {
            Wavelet::Db4 => &DB4,
            Wavelet::Db8 => &DB8,
        }
    }

    /// Quadrature mirror of the low-pass filter: `g[k] = (−1)^k h[L−1−k]`.
    pub fn highpass(&self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|k| if k % 2 == 0 { h[l - 1 - k] } else { -h[l - 1 - k] })
            .collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Wavelet::Db4 => "db4",
            Wavelet::Db8 => "db8",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveletSpec {
    pub wavelet: Wavelet,
    pub levels: usize,
}

impl WaveletSpec {
    pub fn new(wavelet: Wavelet) -> Self {
        WaveletSpec { wavelet, levels: 6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// `details[0]` is D1 (finest) through `details[levels − 1]`.
    pub details: Vec<Vec<f64>>,
    pub approximation: Vec<f64>,
    pub wavelet: Wavelet,
    /// Input length before edge padding.
    pub original_len: usize,
}

fn analysis_step(x: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (j, (&hj, &gj)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * k + j) % n];
            a += hj * v;
            d += gj * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = approx.len() * 2;
    let mut x = vec![0.0; n];
    for k in 0..approx.len() {
        for (j, (&hj, &gj)) in h.iter().zip(g).enumerate() {
            x[(2 * k + j) % n] += hj * approx[k] + gj * detail[k];
        }
    }
    x
}

/// Multi-level decomposition with periodic extension. Inputs whose length
/// is not a multiple of `2^levels` are padded by repeating the last sample.
pub fn dwt_decompose(signal: &[f64], spec: WaveletSpec) -> Result<Decomposition> {
    if spec.levels == 0 || spec.levels > 30 {
        return Err(Error::InvalidArgument(format!("unsupported level count {}", spec.levels)));
    }
    let block = 1usize << spec.levels;
    if signal.len() < block {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            min: block,
        });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSignal);
    }
    let mut current = signal.to_vec();
    let last = *signal.last().expect("non-empty");
    current.resize(signal.len().div_ceil(block) * block, last);

    let h = spec.wavelet.lowpass();
    let g = spec.wavelet.highpass();
    let mut details = Vec::with_capacity(spec.levels);
    for _ in 0..spec.levels {
        let (a, d) = analysis_step(&current, h, &g);
        details.push(d);
        current = a;
    }
    Ok(Decomposition {
        details,
        approximation: current,
        wavelet: spec.wavelet,
        original_len: signal.len(),
    })
}

/// Inverse of [`dwt_decompose`], trimmed back to the original length.
pub fn reconstruct(dec: &Decomposition) -> Vec<f64> {
    let h = dec.wavelet.lowpass();
    let g = dec.wavelet.highpass();
    let mut current = dec.approximation.clone();
    for d in dec.details.iter().rev() {
        current = synthesis_step(&current, d, h, &g);
    }
    current.truncate(dec.original_len);
    current
}
