#![allow(dead_code)]

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use shapga::dataset::FeatureMatrix;
use shapga::signal::{write_record, Record};

/// `n × d` matrix where the columns listed in the second return value are
/// shifted by `shift` standard deviations in the positive class and the
/// rest are pure noise. Roughly a third of the rows are positive.
pub fn planted_matrix(n: usize, d: usize, informative: usize, shift: f64, seed: u64) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<usize> = (0..d).collect();
    columns.shuffle(&mut rng);
    let mut relevant = columns[..informative].to_vec();
    relevant.sort_unstable();
    let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.35)).collect();
    let data = Array2::from_shape_fn((n, d), |(r, c)| {
        let z: f64 = StandardNormal.sample(&mut rng);
        if labels[r] && relevant.binary_search(&c).is_ok() {
            z + shift
        } else {
            z
        }
    });
    let names = (0..d).map(|c| format!("x{c:02}")).collect();
    (FeatureMatrix::new(data, labels, names).unwrap(), relevant)
}

/// A 10 s, 250 Hz three-channel record. True alarms get a faster, noisier
/// heart rhythm so the features carry some label signal.
pub fn synthetic_record(id: &str, label: bool, seed: u64) -> Record {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = 250.0;
    let n = 2500;
    let period = if label { 160 } else { 220 } + rng.random_range(0..20);
    let noise = Normal::new(0.0, if label { 0.08 } else { 0.03 }).unwrap();
    let ecg = (0..n)
        .map(|k| {
            let phase = (k % period) as f64 - period as f64 / 2.0;
            (-(phase * phase) / 10.0).exp() + noise.sample(&mut rng)
        })
        .collect();
    let abp = (0..n)
        .map(|k| 85.0 + 15.0 * (std::f64::consts::TAU * k as f64 / period as f64).sin() + noise.sample(&mut rng))
        .collect();
    let pleth = (0..n)
        .map(|k| (std::f64::consts::PI * k as f64 / period as f64).sin().powi(2) + noise.sample(&mut rng))
        .collect();
    Record {
        id: id.to_string(),
        fs,
        label,
        ecg,
        abp,
        pleth,
    }
}

/// Writes `count` alternating-label records named `rec_000.csv`, ... into
/// `dir`.
pub fn write_records(dir: &Path, count: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for k in 0..count {
        let id = format!("rec_{k:03}");
        let rec = synthetic_record(&id, k % 2 == 0, seed.wrapping_add(k as u64));
        let file = std::fs::File::create(dir.join(format!("{id}.csv"))).unwrap();
        write_record(&rec, std::io::BufWriter::new(file)).unwrap();
    }
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < order.len() {
            let mut end = k;
            while end + 1 < order.len() && v[order[end + 1]] == v[order[k]] {
                end += 1;
            }
            let avg = (k + end) as f64 / 2.0;
            for &i in &order[k..=end] {
                r[i] = avg;
            }
            k = end + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
