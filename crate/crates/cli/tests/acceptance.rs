//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapga::classifiers::{self, roc_auc, ClassifierKind};
use shapga::dataset::FeatureMatrix;
use shapga::estimator::{estimate_shapley_ga, ShapleyGaConfig};
use shapga::ex1::{fit_ex1, EULER_GAMMA};
use shapga::ga::{crossover, mutate, Chromosome, GaConfig};
use shapga::game::{exact_shapley, exact_stratum_means, truncated_shapley, Coalition, DEFAULT_EXACT_CEILING};
use shapga::games::{SynergyGame, TableGame};
use shapga::signal::{dwt_decompose, extract_all, reconstruct, Wavelet, WaveletSpec};
use shapga::valuation::{blend, coalition_value, inner_splits, InnerProtocol, ValuationConfig};
use shapga_cli::{evaluate, extract, report, select, with_workers, RunConfig, SelectionMethod};

const AXIOM_TOL: f64 = 1e-9;
const TRUNCATION_TOL: f64 = 1e-9;
const SPEARMAN_FLOOR: f64 = 0.8;
const EX1_TOL: f64 = 0.02;
const BLEND_TOL: f64 = 1e-12;
const DWT_RECON_TOL: f64 = 1e-8;
const DWT_CONST_TOL: f64 = 1e-10;
const AUC_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_time(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn swap_players(mask: usize, i: usize, j: usize) -> usize {
    let (bi, bj) = ((mask >> i) & 1, (mask >> j) & 1);
    let mut m = mask & !(1 << i) & !(1 << j);
    m |= bj << i;
    m |= bi << j;
    m
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let n = 2 + (seed as usize % 9);
        let g = TableGame::random(n, seed);
        let phi = exact_shapley(&g, DEFAULT_EXACT_CEILING).unwrap();
        let grand = g.values()[(1 << n) - 1];

        worst = worst.max((phi.iter().sum::<f64>() - grand).abs());

        let (i, j) = (0, n - 1);
        let sym = TableGame::new(
            n,
            (0..1usize << n)
                .map(|m| 0.5 * (g.values()[m] + g.values()[swap_players(m, i, j)]))
                .collect(),
        );
        let phi_sym = exact_shapley(&sym, DEFAULT_EXACT_CEILING).unwrap();
        worst = worst.max((phi_sym[i] - phi_sym[j]).abs());

        let d = seed as usize % n;
        let c = 0.37;
        let dummy = TableGame::new(
            n,
            (0..1usize << n)
                .map(|m| g.values()[m & !(1 << d)] + if m >> d & 1 == 1 { c } else { 0.0 })
                .collect(),
        );
        let phi_dummy = exact_shapley(&dummy, DEFAULT_EXACT_CEILING).unwrap();
        worst = worst.max((phi_dummy[d] - c).abs());

        let h = TableGame::random(n, seed + 10_000);
        let phi_h = exact_shapley(&h, DEFAULT_EXACT_CEILING).unwrap();
        let phi_sum = exact_shapley(&g.sum(&h), DEFAULT_EXACT_CEILING).unwrap();
        let added: Vec<f64> = phi.iter().zip(&phi_h).map(|(a, b)| a + b).collect();
        worst = worst.max(max_abs_diff(&phi_sum, &added));
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= AXIOM_TOL && within_time(elapsed, Duration::from_secs(10)),
        format!("100 games, worst axiom violation {worst:.2e} (tol {AXIOM_TOL:e}), {elapsed:.2?} (limit 10 s)"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let n = 2 + (seed as usize % 7);
        let g = TableGame::random(n, 500 + seed);
        let means = exact_stratum_means(&g, DEFAULT_EXACT_CEILING).unwrap();
        let truncated = truncated_shapley(&means, n).unwrap();
        let exact = exact_shapley(&g, DEFAULT_EXACT_CEILING).unwrap();
        worst = worst.max(max_abs_diff(&truncated, &exact));
    }
    outcome(
        worst <= TRUNCATION_TOL,
        format!("20 games, max |truncated - exact| = {worst:.2e} (tol {TRUNCATION_TOL:e})"),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rhos = Vec::new();
    for seed in 0..10u64 {
        let game = SynergyGame::random(12, 0.5, seed);
        let cfg = ShapleyGaConfig {
            ga: GaConfig {
                samples_per_size: 60,
                max_coalition_size: 12,
                seed,
                ..GaConfig::default()
            },
            ..ShapleyGaConfig::default()
        };
        let report = estimate_shapley_ga(&game, &cfg).unwrap();
        rhos.push(common::spearman(&report.values, &game.shapley()));
    }
    let elapsed = start.elapsed();
    let good = rhos.iter().filter(|&&r| r >= SPEARMAN_FLOOR).count();
    let min = rhos.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        good >= 8 && within_time(elapsed, Duration::from_secs(60)),
        format!("Spearman >= {SPEARMAN_FLOOR} in {good}/10 seeds (need 8, min {min:.3}), {elapsed:.2?} (limit 60 s)"),
    )
}

fn recovered(selected: &[usize], informative: &[usize]) -> usize {
    selected.iter().filter(|i| informative.contains(i)).count()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let methods = [
        SelectionMethod::ShapleyGa,
        SelectionMethod::Chi2,
        SelectionMethod::Mi,
        SelectionMethod::Relief,
    ];
    let floors = [4, 3, 3, 3];
    let mut hits = [0usize; 4];
    let mut counts: Vec<Vec<usize>> = vec![Vec::new(); 4];
    for seed in 0..10u64 {
        let (m, informative) = common::planted_matrix(300, 30, 5, 1.0, seed);
        for (k, &method) in methods.iter().enumerate() {
            let cfg = RunConfig {
                seed,
                method,
                mu: 1.0,
                max_coalition_size: 6,
                samples_per_size: 30,
                top_k: 10,
                ..RunConfig::default()
            };
            let out = select::select_features(&m, &cfg).unwrap();
            let r = recovered(&out.selected, &informative);
            counts[k].push(r);
            hits[k] += (r >= floors[k]) as usize;
        }
    }
    let elapsed = start.elapsed();
    let pass = hits.iter().all(|&h| h >= 8) && within_time(elapsed, Duration::from_secs(300));
    let parts: Vec<String> = methods
        .iter()
        .zip(&hits)
        .zip(&counts)
        .zip(&floors)
        .map(|(((m, h), c), f)| format!("{} >={f}/5 in {h}/10 {c:?}", m.name()))
        .collect();
    outcome(pass, format!("{}; {elapsed:.2?} (limit 300 s)", parts.join("; ")))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            -(-u.ln()).ln()
        })
        .collect();
    let fit = fit_ex1(&draws, EULER_GAMMA).unwrap();
    let recovered = fit.location.abs() <= EX1_TOL && (fit.scale - 1.0).abs() <= EX1_TOL;

    let mut below = true;
    for trial in 0..2000 {
        let n = 2 + trial % 50;
        let spread = 10f64.powi(trial as i32 % 7 - 3);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..spread)).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        below &= fit_ex1(&v, EULER_GAMMA).unwrap().location <= mean;
    }
    outcome(
        recovered && below,
        format!(
            "u = {:.4}, alpha = {:.4} on 1e5 draws (tol {EX1_TOL}); u <= mean on 2000 random sets: {below}",
            fit.location, fit.scale
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0usize;
    for _ in 0..100_000 {
        let n = rng.random_range(3..=40);
        let focal = rng.random_range(0..n);
        let t = rng.random_range(0..n);
        let p1 = Chromosome::random(n, focal, t, &mut rng).unwrap();
        let p2 = Chromosome::random(n, focal, t, &mut rng).unwrap();
        let (c1, c2) = crossover(&p1, &p2, &mut rng).unwrap();
        for child in [mutate(&c1, &mut rng), mutate(&c2, &mut rng)] {
            let coalition = child.to_coalition();
            if child.popcount() != t || coalition.contains(focal) || coalition.cardinality() != t {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("100000 crossover+mutation rounds, {violations} invariant violations"))
}

fn criterion_7(dir: &Path) -> Outcome {
    let (m, _) = common::planted_matrix(300, 30, 5, 1.0, 77);
    let matrix = dir.join("planted.csv");
    shapga::dataset::write_matrix(&m, std::fs::File::create(&matrix).unwrap()).unwrap();
    let cfg = RunConfig {
        max_coalition_size: 6,
        samples_per_size: 30,
        ..RunConfig::default()
    };
    let out = dir.join("budget");
    select::cmd_select(&matrix, &out, &cfg).unwrap();
    let summary = std::fs::read_to_string(out.join(select::SUMMARY_FILE)).unwrap();
    let logged: u64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("evaluations,"))
        .and_then(|v| v.parse().ok())
        .unwrap_or(u64::MAX);
    let bound = 2 * 30 * 6 * 30;
    outcome(logged <= bound, format!("{logged} logged evaluations, bound {bound}"))
}

fn criterion_8() -> Outcome {
    let table = blend(0.27, 0.25, 3.5);
    let expected = (0.73 + 3.5 * 0.75) / 4.5;
    let mut ok = (table - expected).abs() < BLEND_TOL && (table - 0.745_555_555_555_555_6).abs() < 1e-12;
    ok &= (blend(0.27, 0.25, 0.0) - 0.73).abs() < BLEND_TOL;
    ok &= (blend(0.27, 0.25, 1e6) - 0.75).abs() < 1e-6;
    ok &= (blend(0.1, 0.3, 1.0) - 0.8).abs() < BLEND_TOL;

    // coalition_value against an independent recount of the confusion matrix
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 120;
    let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
    let data = Array2::from_shape_fn((n, 3), |(r, c)| {
        rng.random_range(-1.0..1.0) + if c == 0 && labels[r] { 0.8 } else { 0.0 }
    });
    let m = FeatureMatrix::new(data, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap();
    let mut worst: f64 = 0.0;
    for (mu, protocol) in [
        (0.5, InnerProtocol::Holdout(0.25)),
        (1.0, InnerProtocol::KFold(4)),
        (3.5, InnerProtocol::Holdout(0.3)),
    ] {
        let cfg = ValuationConfig {
            mu,
            protocol,
            classifier: ClassifierKind::Logistic,
            ..ValuationConfig::default()
        };
        let coalition = Coalition::from_indices(3, [0, 2]).unwrap();
        let got = coalition_value(&m, &coalition, &cfg).unwrap();
        let sub = m.select_columns(&[0, 2]);
        let (mut tp, mut fn_, mut fp, mut tn) = (0.0, 0.0, 0.0, 0.0);
        for (k, (train, valid)) in inner_splits(&m.labels, &cfg).unwrap().iter().enumerate() {
            let tr = sub.select_rows(train);
            let model = classifiers::train(
                cfg.classifier,
                tr.view(),
                &tr.labels,
                &cfg.hyperparams,
                shapga::seed::derive_seed(cfg.seed, &[k as u64]),
            )
            .unwrap();
            for &r in valid {
                let predicted = model.predict(sub.data.row(r));
                match (m.labels[r], predicted) {
                    (true, true) => tp += 1.0,
                    (true, false) => fn_ += 1.0,
                    (false, true) => fp += 1.0,
                    (false, false) => tn += 1.0,
                }
            }
        }
        let expected = (tp / (tp + fn_) + mu * tn / (tn + fp)) / (1.0 + mu);
        worst = worst.max((got - expected).abs());
    }
    ok &= worst < BLEND_TOL;
    ok &= coalition_value(&m, &Coalition::empty(3), &ValuationConfig::default()).unwrap() == 0.0;
    outcome(
        ok,
        format!("(0.27, 0.25, 3.5) -> {table:.10}; mu limits hold; recount deviation {worst:.1e}"),
    )
}

fn criterion_9() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for k in 0..4 {
        let rec = common::synthetic_record(&format!("r{k}"), k % 2 == 0, k as u64);
        let fv = extract_all(&rec).unwrap();
        ok &= fv.values.len() == 380 && fv.values.iter().all(|v| v.is_finite());
    }
    details.push("4 records x 380 finite features".to_string());

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_recon: f64 = 0.0;
    let mut worst_const: f64 = 0.0;
    for w in [Wavelet::Db4, Wavelet::Db8] {
        for len in [64, 640, 2500] {
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
            let dec = dwt_decompose(&x, WaveletSpec::new(w)).unwrap();
            worst_recon = worst_recon.max(max_abs_diff(&x, &reconstruct(&dec)));
            let c = dwt_decompose(&vec![2.5; len], WaveletSpec::new(w)).unwrap();
            let d = c.details.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            worst_const = worst_const.max(d);
        }
    }
    ok &= worst_recon < DWT_RECON_TOL && worst_const < DWT_CONST_TOL;
    details.push(format!("reconstruction error {worst_recon:.1e} (tol {DWT_RECON_TOL:e})"));
    details.push(format!("constant-signal details {worst_const:.1e} (tol {DWT_CONST_TOL:e})"));
    outcome(ok, details.join(", "))
}

fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                total += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    total / pairs
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = rng.random_range(2..=200);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let coarse = k % 2 == 0;
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                let s: f64 = rng.random();
                if coarse {
                    (s * 10.0).round() / 10.0
                } else {
                    s
                }
            })
            .collect();
        let auc = roc_auc(&scores, &labels).unwrap().auc;
        worst = worst.max((auc - brute_force_auc(&scores, &labels)).abs());
    }
    outcome(worst <= AUC_TOL, format!("50 instances, max deviation {worst:.1e} (tol {AUC_TOL:e})"))
}

fn pipeline(root: &Path, records: &Path, workers: usize) {
    let cfg = RunConfig {
        seed: 11,
        workers,
        max_coalition_size: 2,
        samples_per_size: 6,
        population_size: 4,
        top_k: 10,
        ..RunConfig::default()
    };
    with_workers(workers, || {
        let matrix = root.join("features.csv");
        extract::cmd_extract(records, &matrix).unwrap();
        let mut selections = Vec::new();
        for method in [SelectionMethod::ShapleyGa, SelectionMethod::Chi2] {
            let out = root.join(method.name());
            select::cmd_select(&matrix, &out, &RunConfig { method, ..cfg.clone() }).unwrap();
            selections.push(out.join(select::SELECTION_FILE));
        }
        evaluate::cmd_evaluate(&matrix, &selections[0], &root.join("evaluation"), &cfg).unwrap();
        report::cmd_report(&selections, &root.join("report.csv")).unwrap();
    })
    .unwrap();
}

fn collect_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(&path, out);
        } else {
            out.push(path);
        }
    }
}

fn criterion_11(dir: &Path) -> Outcome {
    let records = dir.join("records");
    common::write_records(&records, 16, 1100);
    let (a, b) = (dir.join("run_a"), dir.join("run_b"));
    pipeline(&a, &records, 1);
    pipeline(&b, &records, 4);
    let mut files = Vec::new();
    collect_files(&a, &mut files);
    files.sort();
    let mut differing = Vec::new();
    for f in &files {
        let rel = f.strip_prefix(&a).unwrap();
        let other = std::fs::read(b.join(rel)).unwrap_or_default();
        if std::fs::read(f).unwrap() != other {
            differing.push(rel.display().to_string());
        }
    }
    let mut other_files = Vec::new();
    collect_files(&b, &mut other_files);
    let same_count = other_files.len() == files.len();
    outcome(
        differing.is_empty() && same_count && files.len() >= 10,
        format!("{} output files compared across 1 and 4 workers, differing: {differing:?}", files.len()),
    )
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 Shapley axioms", Box::new(criterion_1)),
        ("2 truncation identity", Box::new(criterion_2)),
        ("3 GA estimator fidelity", Box::new(criterion_3)),
        ("4 planted-relevance recovery", Box::new(criterion_4)),
        ("5 EX1 recovery", Box::new(criterion_5)),
        ("6 GA operator invariants", Box::new(criterion_6)),
        ("7 evaluation budget", Box::new(|| criterion_7(tmp.path()))),
        ("8 coalition-value arithmetic", Box::new(criterion_8)),
        ("9 feature pipeline shape", Box::new(criterion_9)),
        ("10 AUC oracle", Box::new(criterion_10)),
        ("11 end-to-end determinism", Box::new(|| criterion_11(tmp.path()))),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, run) in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.split(' ').next() == Some(f.as_str()) || (f.parse::<u32>().is_err() && name.contains(f.as_str()))) {
            continue;
        }
        ran += 1;
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                outcome(false, format!("panicked: {msg}"))
            });
        println!("acceptance {name}: {} ({})", if result.pass { "PASS" } else { "FAIL" }, result.detail);
        failed += (!result.pass) as usize;
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
