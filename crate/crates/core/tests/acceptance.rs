//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria that need a dataset file which is not present report
//! `FAIL (blocked)` and do not change the exit status; any other failure
//! exits non-zero. Dataset files are read from `data/` at the repository root,
//! or from `MVQC_DATA_DIR`.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use mvqc_core::data::{
    explained_variance_profile, fit_pca, load_csv, prepare, split, AngleRange, Dataset, DatasetSchema,
    FittedPipeline, PipelineFitter, SplitDataset, DEFAULT_FRACTIONS,
};
use mvqc_core::gradients::loss_gradient;
use mvqc_core::loss::{compute_class_weights, weighted_loss, ClassWeights};
use mvqc_core::metrics::{compute_metrics, evaluate as score, ConfusionCounts};
use mvqc_core::model::{ModelFile, MultiVqcConfig, MultiVqcModel};
use mvqc_core::quantum::{run_circuit, Statevector};
use mvqc_core::templates::{build_vqc, AnsatzKind, EncodingKind, VqcConfig};
use mvqc_core::trainer::{sweep, train, Adam, CellStatus, SweepGrid, SweepOptions, SweepTable, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

fn repo_root() -> PathBuf {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    manifest.parent().and_then(|p| p.parent()).map_or(manifest.clone(), PathBuf::from)
}

fn data_dir() -> PathBuf {
    std::env::var_os("MVQC_DATA_DIR").map_or_else(|| repo_root().join("data"), PathBuf::from)
}

/// Loads `data/<name>.csv` with `schemas/<name>.json`; `Err` names the
/// missing file.
fn dataset(name: &str) -> Result<Dataset, String> {
    let path = data_dir().join(format!("{name}.csv"));
    if !path.exists() {
        return Err(format!("{} not found", path.display()));
    }
    let schema = DatasetSchema::load(&repo_root().join(format!("schemas/{name}.json"))).map_err(|e| e.to_string())?;
    load_csv(&path, &schema).map_err(|e| e.to_string())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn random_vqc<R: Rng>(rng: &mut R, n_qubits: usize, max_layers: usize) -> VqcConfig {
    VqcConfig {
        n_qubits,
        encoding: EncodingKind::ALL[rng.gen_range(0..2)],
        ansatz: AnsatzKind::ALL[rng.gen_range(0..2)],
        n_layers: rng.gen_range(1..=max_layers),
        reuploading: rng.gen(),
        n_measured: n_qubits,
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut strongly = 0;
    for _ in 0..500 {
        let n = rng.gen_range(2..=3);
        let cfg = random_vqc(&mut rng, n, 5);
        strongly += usize::from(cfg.ansatz == AnsatzKind::Strongly);
        let circuit = build_vqc(&cfg).unwrap();
        let params: Vec<f64> = (0..circuit.n_params).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let x: Vec<f64> = (0..cfg.n_qubits).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect();
        let sv = run_circuit(cfg.n_qubits, &circuit.gates, &params, &x).unwrap();
        worst = worst.max(max_abs_diff(sv.amplitudes(), &oracle_state(cfg.n_qubits, &circuit.gates, &params, &x)));
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("500 circuits ({strongly} strongly), max |Δamp| = {worst:.2e}, {secs:.2} s");
    if worst <= 1e-12 && secs < 10.0 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut by_len = [0usize; 3];
    for i in 0..100 {
        let n_vqcs = i % 3 + 1;
        by_len[n_vqcs - 1] += 1;
        let width = rng.gen_range(2..=3);
        let v = random_vqc(&mut rng, width, 3);
        let config = MultiVqcConfig::chain(width, n_vqcs, v.encoding, v.ansatz, v.reuploading, v.n_layers, 2);
        let model = MultiVqcModel::new(config).unwrap();
        let mut params = model.new_params();
        params.randomize(&mut rng, std::f64::consts::TAU);
        let x: Vec<f64> = (0..width).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect();
        let label = rng.gen_range(0..2);
        let w = ClassWeights::new(rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
        let (_, grad) = loss_gradient(&model, &params, &x, label, &w).unwrap();
        let loss = |flat: &[f64]| {
            let mut p = model.new_params();
            p.values_mut().copy_from_slice(flat);
            weighted_loss(&model.forward(&p, &x).unwrap(), label, &w)
        };
        let fd = finite_difference(loss, params.values(), 1e-5);
        for (a, b) in grad.iter().zip(&fd) {
            worst = worst.max((a - b).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!(
        "100 triples ({}x1, {}x2, {}x3 VQCs), max |shift - fd| = {worst:.2e}, {secs:.2} s",
        by_len[0], by_len[1], by_len[2]
    );
    if worst <= 1e-6 && secs < 60.0 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn criterion_3() -> Outcome {
    let checks = [("heart_failure", 5, 0.90), ("diabetes", 6, 0.90), ("prostate_cancer", 6, 0.99)];
    let mut parts = Vec::new();
    let (mut failed, mut blocked) = (false, false);
    for (name, k, threshold) in checks {
        match dataset(name) {
            Err(e) => {
                blocked = true;
                parts.push(format!("{name}: {e}"));
            }
            Ok(data) => {
                let ratios = explained_variance_profile(&data).unwrap();
                let cum: f64 = ratios.iter().take(k).sum();
                let ok = cum > threshold;
                failed |= !ok;
                parts.push(format!("{name}: cumulative@{k} = {cum:.4} (> {threshold}: {ok})"));
            }
        }
    }
    let msg = parts.join("; ");
    if failed {
        Outcome::Fail(msg)
    } else if blocked {
        Outcome::Blocked(msg)
    } else {
        Outcome::Pass(msg)
    }
}

/// True when `w` is the double nearest to `num / den`.
fn is_nearest_double(w: f64, num: u64, den: u64) -> bool {
    let bits = w.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    if exp == 0 || w < 0.0 {
        return false;
    }
    let mant = ((bits & ((1u64 << 52) - 1)) | (1u64 << 52)) as i128;
    // w = mant / 2^k
    let k = 1075 - exp;
    if !(0..=70).contains(&k) {
        return false;
    }
    let diff = mant * den as i128 - (num as i128) * (1i128 << k);
    2 * diff.abs() <= den as i128
}

fn criterion_4() -> Outcome {
    // Expected (weight_0, weight_1) from the stated class-1 prevalence.
    let checks = [("heart_failure", 0.32), ("diabetes", 0.349), ("prostate_cancer", 0.62)];
    let mut parts = Vec::new();
    let (mut failed, mut blocked) = (false, false);
    for (name, prevalence) in checks {
        let data = match dataset(name) {
            Err(e) => {
                blocked = true;
                parts.push(format!("{name}: {e}"));
                continue;
            }
            Ok(d) => d,
        };
        let w = compute_class_weights(&data.labels).unwrap();
        let [c0, c1] = data.class_counts();
        let n = (c0 + c1) as u64;
        let exact_mass = w.class_mass(0) == w.class_mass(1)
            && is_nearest_double(w.weight_class0, c1 as u64, n)
            && is_nearest_double(w.weight_class1, c0 as u64, n);
        let (m0, m1) = (w.weight_class0 * c0 as f64, w.weight_class1 * c1 as f64);
        let float_mass = (m0 - m1).abs() <= f64::EPSILON * m0.max(m1);
        // One sample of rounding in the stated percentage.
        let tol = 0.5 / 100.0 + 1.0 / n as f64;
        let proportions =
            (w.weight_class0 - prevalence).abs() <= tol && (w.weight_class1 - (1.0 - prevalence)).abs() <= tol;
        let ok = exact_mass && float_mass && proportions;
        failed |= !ok;
        parts.push(format!(
            "{name}: w0 = {c1}/{n} = {:.4}, w1 = {c0}/{n} = {:.4}, mass {c0}*{c1}/{n} both classes ({ok})",
            w.weight_class0, w.weight_class1
        ));
    }
    let msg = parts.join("; ");
    if failed {
        Outcome::Fail(msg)
    } else if blocked {
        Outcome::Blocked(msg)
    } else {
        Outcome::Pass(msg)
    }
}

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Splits with `seed`, fits the pipeline at `k` components and sweeps `grid`.
fn seeded_sweep(data: &Dataset, k: usize, grid: &SweepGrid, seed: u64) -> SweepTable {
    let s = split(data, DEFAULT_FRACTIONS, seed).unwrap();
    let (prepared, _) = prepare(&s, k, AngleRange::ZeroPi).unwrap();
    let mut by_k = BTreeMap::new();
    by_k.insert(k, prepared);
    let tcfg = TrainConfig { seed, ..Default::default() };
    sweep(grid, &by_k, &tcfg, &SweepOptions::default(), |_| {}).unwrap()
}

/// Test F1 of the best-ranked successful row satisfying `pick`.
fn best_test_f1(table: &SweepTable, pick: impl Fn(usize) -> bool) -> Option<f64> {
    table
        .rows
        .iter()
        .find(|r| r.status == CellStatus::Ok && r.n_vqcs.is_some_and(&pick))
        .map(|r| r.test.f1)
}

fn criterion_5() -> Outcome {
    let data = match dataset("prostate_cancer") {
        Err(e) => return Outcome::Blocked(e),
        Ok(d) => d,
    };
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut best: f64 = 0.0;
    for k in [2, 3] {
        let grid = SweepGrid { n_vqcs: vec![3], include_baseline: false, ..SweepGrid::full(vec![k]) };
        let f1s: Vec<f64> = SEEDS
            .iter()
            .map(|&seed| best_test_f1(&seeded_sweep(&data, k, &grid, seed), |v| v == 3).unwrap_or(0.0))
            .collect();
        let m = median(f1s.clone());
        best = best.max(m);
        parts.push(format!("k={k}: test F1 {f1s:.3?}, median {m:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("{}; {secs:.0} s", parts.join("; "));
    if best >= 0.80 && secs < 900.0 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn criterion_6() -> Outcome {
    let data = match dataset("diabetes") {
        Err(e) => return Outcome::Blocked(e),
        Ok(d) => d,
    };
    let start = Instant::now();
    let grid = SweepGrid { include_baseline: false, ..SweepGrid::full(vec![3]) };
    let (mut single, mut multi) = (Vec::new(), Vec::new());
    for seed in SEEDS {
        let table = seeded_sweep(&data, 3, &grid, seed);
        single.push(best_test_f1(&table, |v| v == 1).unwrap_or(0.0));
        multi.push(best_test_f1(&table, |v| v >= 2).unwrap_or(0.0));
    }
    let (ms, mm) = (median(single.clone()), median(multi.clone()));
    let msg = format!(
        "1-VQC test F1 {single:.3?} (median {ms:.3}); multi-VQC {multi:.3?} (median {mm:.3}); {:.0} s",
        start.elapsed().as_secs_f64()
    );
    if mm >= ms - 0.02 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn check(failures: &mut Vec<&'static str>, name: &'static str, ok: bool) {
    if !ok {
        failures.push(name);
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let mut failures = Vec::new();
    let mut count = 0;
    let mut run = |failures: &mut Vec<&'static str>, name, ok| {
        count += 1;
        check(failures, name, ok)
    };

    // Simulator: norm preservation and inverse sequences.
    let mut norm_ok = true;
    let mut inverse_ok = true;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let gates: Vec<_> = (0..40).map(|_| random_gate(&mut rng, n)).collect();
        let mut sv = Statevector::zero(n).unwrap();
        for g in &gates {
            let t = g.angle.as_ref().map_or(0.0, |a| resolve(a, &[], &[]));
            sv.apply(g, t).unwrap();
        }
        norm_ok &= (sv.norm_sqr() - 1.0).abs() < 1e-10;
        for g in gates.iter().rev() {
            let t = g.angle.as_ref().map_or(0.0, |a| resolve(a, &[], &[]));
            sv.apply(g, -t).unwrap();
        }
        inverse_ok &= (sv.amplitudes()[0].re - 1.0).abs() < 1e-10 && (sv.norm_sqr() - 1.0).abs() < 1e-10;
    }
    run(&mut failures, "norm preservation", norm_ok);
    run(&mut failures, "unitarity", inverse_ok);

    // Metric identities.
    let mut metrics_ok = true;
    for _ in 0..500 {
        let c = ConfusionCounts {
            tp: rng.gen_range(0..20),
            fp: rng.gen_range(0..20),
            fn_: rng.gen_range(0..20),
            tn: rng.gen_range(0..20),
        };
        let m = compute_metrics(&c);
        let (p, r) = (m.precision, m.recall);
        metrics_ok &= m.f1 >= 0.0 && m.f1 <= (2.0 * p.min(r)).min(1.0) + 1e-12 && m.f1 <= p.max(r) + 1e-12;
        if p + r > 0.0 {
            metrics_ok &= (m.f1 - 2.0 * p * r / (p + r)).abs() < 1e-12;
        } else {
            metrics_ok &= m.f1 == 0.0 && m.f1_undefined;
        }
        let more = compute_metrics(&ConfusionCounts { tp: c.tp + 1, ..c });
        metrics_ok &= more.f1 >= m.f1;
    }
    let preds: Vec<usize> = (0..50).map(|_| rng.gen_range(0..2)).collect();
    let labels: Vec<usize> = (0..50).map(|_| rng.gen_range(0..2)).collect();
    let mut order: Vec<usize> = (0..50).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    let (pp, pl): (Vec<usize>, Vec<usize>) = order.iter().map(|&i| (preds[i], labels[i])).unzip();
    metrics_ok &= score(&preds, &labels).unwrap() == score(&pp, &pl).unwrap();
    run(&mut failures, "metric identities", metrics_ok);

    // Model outputs and determinism.
    let config = MultiVqcConfig::chain(3, 3, EncodingKind::Rx, AnsatzKind::Strongly, true, 2, 2);
    let model = MultiVqcModel::new(config).unwrap();
    let mut bounded = true;
    let mut deterministic = true;
    for _ in 0..20 {
        let mut params = model.new_params();
        params.randomize(&mut rng, 20.0);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..3.2)).collect();
        let out = model.forward(&params, &x).unwrap();
        bounded &= out.class_scores.iter().all(|s| (-1.0..=1.0).contains(s))
            && (out.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-10;
        let w = ClassWeights::new(0.4, 0.6);
        let a = loss_gradient(&model, &params, &x, 1, &w).unwrap();
        let b = loss_gradient(&model, &params, &x, 1, &w).unwrap();
        deterministic &= a.1.iter().zip(&b.1).all(|(u, v)| u.to_bits() == v.to_bits())
            && out == model.forward(&params, &x).unwrap();
    }
    run(&mut failures, "model output bounds", bounded);
    run(&mut failures, "forward/gradient determinism", deterministic);

    // Data pipeline: reconstruction, ordering, leakage.
    let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let pca = fit_pca(&rows, 6).unwrap();
    let back = pca.inverse_transform(&pca.transform(&rows).unwrap());
    run(
        &mut failures,
        "PCA reconstruction",
        rows.iter().flatten().zip(back.iter().flatten()).all(|(a, b)| (a - b).abs() < 1e-8),
    );
    let cum = pca.cumulative_ratio();
    run(&mut failures, "cumulative variance monotone", cum.windows(2).all(|w| w[1] >= w[0]));
    run(
        &mut failures,
        "pipeline order",
        PipelineFitter::new().fit_pca(2).is_err() && PipelineFitter::new().fit_encoding(AngleRange::ZeroPi).is_err(),
    );
    let mut features: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 9) as f64, (i * 7 % 13) as f64, (i % 4) as f64]).collect();
    features.push(vec![500.0, -90.0, 3.0]);
    features.push(vec![-300.0, 70.0, 1.0]);
    let labels: Vec<usize> = (0..42).map(|i| i % 2).collect();
    let crafted = Dataset::new("crafted", features, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap();
    let s = split(&crafted, DEFAULT_FRACTIONS, 5).unwrap();
    let (prepared, pipeline) = prepare(&s, 2, AngleRange::ZeroPi).unwrap();
    let mut all = s.train.features.clone();
    all.extend(s.validation.features.iter().cloned());
    all.extend(s.test.features.iter().cloned());
    let leaked = FittedPipeline::fit(&all, 2, AngleRange::ZeroPi).unwrap();
    run(
        &mut failures,
        "leakage guard",
        pipeline == FittedPipeline::fit(&s.train.features, 2, AngleRange::ZeroPi).unwrap()
            && leaked.transform(&s.test.features).unwrap() != prepared.test.features,
    );
    let total = s.train.len() + s.validation.len() + s.test.len();
    run(&mut failures, "split partition", total == crafted.len() && s == split(&crafted, DEFAULT_FRACTIONS, 5).unwrap());

    // Trainer pieces.
    let labels: Vec<usize> = (0..203).map(|i| usize::from(i < 96)).collect();
    let w = compute_class_weights(&labels).unwrap();
    run(&mut failures, "class mass equality", w.class_mass(0) == w.class_mass(1));
    let mut adam = Adam::new(2, 0.5);
    let mut p = vec![1.0, -2.0];
    adam.step(&mut p, &[0.0, 0.0]);
    run(&mut failures, "adam zero gradient", p == vec![1.0, -2.0]);

    let msg = format!("{}/{count} invariant checks hold", count - failures.len());
    if failures.is_empty() {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(format!("{msg}; failing: {}", failures.join(", ")))
    }
}

fn determinism_data() -> SplitDataset {
    if let Ok(data) = dataset("diabetes") {
        let s = split(&data, DEFAULT_FRACTIONS, 8).unwrap();
        return prepare(&s, 2, AngleRange::ZeroPi).unwrap().0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    split_of(two_blobs(&mut rng, 60, 2), two_blobs(&mut rng, 20, 2), two_blobs(&mut rng, 20, 2))
}

fn criterion_8() -> Outcome {
    let data = determinism_data();
    let config = MultiVqcConfig::chain(2, 2, EncodingKind::Ry, AnsatzKind::Strongly, true, 2, 2);
    let tcfg = TrainConfig { max_epochs: 5, seed: 8, ..Default::default() };
    let artifacts = || {
        let report = train(&config, &data, &tcfg).unwrap();
        let model = MultiVqcModel::new(config.clone()).unwrap();
        let params = report.params_for(&model).unwrap();
        (
            serde_json::to_string_pretty(&report).unwrap(),
            ModelFile::new(config.clone(), &params).to_json().unwrap(),
        )
    };
    let train_same = artifacts() == artifacts();

    let mut by_k = BTreeMap::new();
    by_k.insert(2, data.clone());
    let grid = SweepGrid {
        n_vqcs: vec![1, 2],
        encodings: vec![EncodingKind::Rx],
        ansatzes: vec![AnsatzKind::Basic],
        max_layers: 2,
        ..SweepGrid::full(vec![2])
    };
    let sweep_tcfg = TrainConfig { max_epochs: 3, ..tcfg.clone() };
    let outputs = |workers| {
        let t = sweep(&grid, &by_k, &sweep_tcfg, &SweepOptions { workers, ..Default::default() }, |_| {}).unwrap();
        (t.to_csv().unwrap(), t.to_json().unwrap(), t.summary_csv().unwrap())
    };
    let sweep_same = outputs(1) == outputs(1) && outputs(1) == outputs(2);
    let msg = format!("train artifacts identical: {train_same}; sweep CSV/JSON identical across runs and worker counts: {sweep_same}");
    if train_same && sweep_same {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn main() -> ExitCode {
    // Accept and ignore libtest flags passed by `cargo test`.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("1 simulator oracle equivalence", criterion_1),
        ("2 parameter-shift vs finite difference", criterion_2),
        ("3 PCA explained variance", criterion_3),
        ("4 class-weight rule", criterion_4),
        ("5 prostate cancer end-to-end F1", criterion_5),
        ("6 diabetes multi-VQC vs single VQC", criterion_6),
        ("7 invariant suites", criterion_7),
        ("8 output determinism", criterion_8),
    ];
    let mut failed = 0;
    let mut blocked = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let line = match f() {
            Outcome::Pass(m) => format!("criterion {name}: PASS ({m})"),
            Outcome::Fail(m) => {
                failed += 1;
                format!("criterion {name}: FAIL ({m})")
            }
            Outcome::Blocked(m) => {
                blocked += 1;
                format!("criterion {name}: FAIL (blocked, input missing: {m})")
            }
        };
        println!("{line}");
    }
    println!("acceptance: {failed} failed, {blocked} blocked on missing inputs");
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
