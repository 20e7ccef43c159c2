//! Physiological records to fixed-layout feature vectors.
//!
//! Each record carries three channels (ECG lead II, arterial blood
//! pressure, photoplethysmogram). Every channel gets a six-level DWT (db8
//! for ECG, db4 for the others) and the 20 statistics of each detail
//! subband D1..D6; the ECG also yields 20 statistics of its heart-rate
//! signal. Layout: ECG, ABP, PLETH wavelet blocks (subband-major), then HRV.

pub mod hrv;
pub mod stats;
pub mod wavelet;

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub use hrv::{detect_rpeaks, hrv_signal};
pub use stats::{stat_features, N_STATS, STAT_NAMES};
pub use wavelet::{dwt_decompose, reconstruct, Decomposition, Wavelet, WaveletSpec};

pub const N_SUBBANDS: usize = 6;
pub const N_FEATURES: usize = 3 * N_SUBBANDS * N_STATS + N_STATS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignalSource {
    EcgWavelet,
    PlethWavelet,
    AbpWavelet,
    EcgHrv,
}

impl SignalSource {
    pub const ALL: [SignalSource; 4] = [
        SignalSource::EcgWavelet,
        SignalSource::PlethWavelet,
        SignalSource::AbpWavelet,
        SignalSource::EcgHrv,
    ];

    pub fn prefix(&self) -> &'static str {
        match self {
            SignalSource::EcgWavelet => "ecg_wav",
            SignalSource::PlethWavelet => "pleth_wav",
            SignalSource::AbpWavelet => "abp_wav",
            SignalSource::EcgHrv => "ecg_hrv",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SignalSource::EcgWavelet => "ecg_wavelet",
            SignalSource::PlethWavelet => "pleth_wavelet",
            SignalSource::AbpWavelet => "abp_wavelet",
            SignalSource::EcgHrv => "ecg_hrv",
        }
    }
}

/// Where a feature comes from: source, detail subband (1..=6, wavelet
/// sources only), and statistic index (1..=20).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Provenance {
    pub source: SignalSource,
    pub subband: Option<u8>,
    pub stat: u8,
}

impl Provenance {
    /// Parses names produced by the [`fmt::Display`] impl, such as
    /// `ecg_wav_d3_kurtosis` or `ecg_hrv_mean`.
    pub fn parse(name: &str) -> Option<Provenance> {
        for source in SignalSource::ALL {
            let Some(rest) = name.strip_prefix(source.prefix()).and_then(|r| r.strip_prefix('_')) else {
                continue;
            };
            let (subband, stat_name) = if source == SignalSource::EcgHrv {
                (None, rest)
            } else {
                let (band, stat) = rest.split_once('_')?;
                let band: u8 = band.strip_prefix('d')?.parse().ok()?;
                if !(1..=N_SUBBANDS as u8).contains(&band) {
                    return None;
                }
                (Some(band), stat)
            };
            let stat = STAT_NAMES.iter().position(|&s| s == stat_name)? as u8 + 1;
            return Some(Provenance { source, subband, stat });
        }
        None
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let stat = STAT_NAMES[self.stat as usize - 1];
        match self.subband {
            Some(b) => write!(f, "{}_d{}_{}", self.source.prefix(), b, stat),
            None => write!(f, "{}_{}", self.source.prefix(), stat),
        }
    }
}

/// Provenance of every feature, in extraction order.
pub fn feature_layout() -> Vec<Provenance> {
    let mut out = Vec::with_capacity(N_FEATURES);
    for source in [SignalSource::EcgWavelet, SignalSource::AbpWavelet, SignalSource::PlethWavelet] {
        for band in 1..=N_SUBBANDS as u8 {
            for stat in 1..=N_STATS as u8 {
                out.push(Provenance {
                    source,
                    subband: Some(band),
                    stat,
                });
            }
        }
    }
    for stat in 1..=N_STATS as u8 {
        out.push(Provenance {
            source: SignalSource::EcgHrv,
            subband: None,
            stat,
        });
    }
    out
}

pub fn feature_names() -> Vec<String> {
    feature_layout().iter().map(|p| p.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub fs: f64,
    /// True for a true alarm.
    pub label: bool,
    pub ecg: Vec<f64>,
    pub abp: Vec<f64>,
    pub pleth: Vec<f64>,
}

impl Record {
    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::MalformedRecord(format!("{}: sampling rate must be positive", self.id)));
        }
        if self.ecg.len() != self.abp.len() || self.ecg.len() != self.pleth.len() {
            return Err(Error::MalformedRecord(format!("{}: channel lengths differ", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub provenance: Vec<Provenance>,
    /// Set when too few R-peaks were found and the HRV block was zero-filled.
    pub hrv_flagged: bool,
}

/// Runs the full per-record pipeline.
pub fn extract_all(rec: &Record) -> Result<FeatureVector> {
    rec.validate()?;
    let mut values = Vec::with_capacity(N_FEATURES);
    let channels = [
        (&rec.ecg, Wavelet::Db8),
        (&rec.abp, Wavelet::Db4),
        (&rec.pleth, Wavelet::Db4),
    ];
    for (signal, wavelet) in channels {
        let dec = dwt_decompose(signal, WaveletSpec::new(wavelet))?;
        for detail in &dec.details {
            values.extend_from_slice(&stat_features(detail)?);
        }
    }
    let hrv = detect_rpeaks(&rec.ecg, rec.fs).and_then(|p| hrv_signal(&p, rec.fs));
    let hrv_flagged = match hrv {
        Ok(rate) => {
            values.extend_from_slice(&stat_features(&rate)?);
            false
        }
        Err(_) => {
            values.extend_from_slice(&[0.0; N_STATS]);
            true
        }
    };
    debug_assert_eq!(values.len(), N_FEATURES);
    Ok(FeatureVector {
        values,
        provenance: feature_layout(),
        hrv_flagged,
    })
}

fn channel_slot(name: &str) -> Option<usize> {
    match name.trim().to_ascii_lowercase().as_str() {
        "ecg" | "ecgii" | "ecg_ii" | "ii" => Some(0),
        "abp" => Some(1),
        "pleth" | "ppg" => Some(2),
        _ => None,
    }
}

/// Parses a record file:
///
/// ```text
/// # fs=250,label=1
/// ecg,abp,pleth
/// 0.01,81.2,1.3
/// ...
/// ```
///
/// The first line carries the sampling rate and alarm label; the second
/// names the channels in any order.
pub fn read_record<R: Read>(id: &str, reader: R) -> Result<Record> {
    let bad = |msg: String| Error::MalformedRecord(format!("{id}: {msg}"));
    let mut lines = BufReader::new(reader).lines();
    let meta = lines.next().ok_or_else(|| bad("empty file".into()))??;
    let meta = meta
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| bad("first line must start with '#'".into()))?;
    let (mut fs, mut label) = (None, None);
    for pair in meta.split(',') {
        let (k, v) = pair.split_once('=').ok_or_else(|| bad(format!("bad metadata entry {pair:?}")))?;
        match k.trim() {
            "fs" => fs = Some(v.trim().parse::<f64>().map_err(|_| bad(format!("bad fs {v:?}")))?),
            "label" => {
                label = Some(match v.trim().to_ascii_lowercase().as_str() {
                    "1" | "true" => true,
                    "0" | "false" => false,
                    other => return Err(bad(format!("bad label {other:?}"))),
                })
            }
            _ => {}
        }
    }
    let fs = fs.ok_or_else(|| bad("missing fs".into()))?;
    let label = label.ok_or_else(|| bad("missing label".into()))?;

    let header = lines.next().ok_or_else(|| bad("missing channel header".into()))??;
    let slots: Vec<usize> = header
        .split(',')
        .map(|h| channel_slot(h).ok_or_else(|| bad(format!("unknown channel {h:?}"))))
        .collect::<Result<_>>()?;
    let mut seen = [false; 3];
    slots.iter().for_each(|&s| seen[s] = true);
    if slots.len() != 3 || !seen.iter().all(|&s| s) {
        return Err(bad("header must name ecg, abp and pleth exactly once".into()));
    }

    let mut channels: [Vec<f64>; 3] = Default::default();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::RaggedRow {
                line: k + 3,
                expected: 3,
                found: fields.len(),
            });
        }
        for (field, &slot) in fields.iter().zip(&slots) {
            let v: f64 = field.trim().parse().map_err(|_| Error::NonNumeric {
                line: k + 3,
                column: ["ecg", "abp", "pleth"][slot].into(),
                value: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteSignal);
            }
            channels[slot].push(v);
        }
    }
    let [ecg, abp, pleth] = channels;
    let rec = Record {
        id: id.to_string(),
        fs,
        label,
        ecg,
        abp,
        pleth,
    };
    rec.validate()?;
    Ok(rec)
}

/// Loads a record file; the record id is the file stem.
pub fn load_record(path: impl AsRef<Path>) -> Result<Record> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_record(&id, std::fs::File::open(path)?)
}

pub fn write_record<W: Write>(rec: &Record, mut w: W) -> Result<()> {
    writeln!(w, "# fs={},label={}", rec.fs, if rec.label { 1 } else { 0 })?;
    writeln!(w, "ecg,abp,pleth")?;
    for k in 0..rec.ecg.len() {
        writeln!(w, "{},{},{}", rec.ecg[k], rec.abp[k], rec.pleth[k])?;
    }
    Ok(())
}
