use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use mvqc_core::data::{
    explained_variance_profile, load_csv, prepare, split, Dataset, DatasetSchema, FittedPipeline, SplitDataset,
};
use mvqc_core::logreg::{evaluate_logreg, fit_logreg, LogRegReport};
use mvqc_core::loss::{compute_class_weights, ClassWeights};
use mvqc_core::metrics::{ConfusionCounts, Metrics};
use mvqc_core::model::ModelFile;
use mvqc_core::trainer::{
    evaluate, sweep, train, CellResult, CellStatus, Evaluation, SweepGrid, SweepOptions, SweepTable, TrainReport,
    DEFAULT_MAX_LAYERS,
};
use mvqc_core::MultiVqcConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    text.push('\n');
    write(path, &text)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn output_dir(config: &RunConfig) -> CliResult<PathBuf> {
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn load(config: &RunConfig) -> CliResult<Dataset> {
    let schema = DatasetSchema::load(&config.schema_path())?;
    let data = load_csv(&config.dataset_path(), &schema)?;
    info!("loaded {}: {} rows, {} features", data.name, data.len(), data.width());
    Ok(data)
}

fn split_of(config: &RunConfig, data: &Dataset) -> CliResult<SplitDataset> {
    Ok(split(data, config.split_fractions, config.train.seed)?)
}

fn check_components(k: usize, data: &Dataset) -> CliResult<()> {
    if k > data.width() {
        return Err(CliError::config(format!(
            "{k} components requested but {} has only {} features",
            data.name,
            data.width()
        )));
    }
    Ok(())
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::data(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::data(e.to_string()))
}

pub const METRICS_COLUMNS: [&str; 15] = [
    "split", "n", "loss", "tp", "fp", "fn", "tn", "precision", "recall", "f1", "precision_undefined",
    "recall_undefined", "f1_undefined", "model", "seed",
];

fn metrics_row(split: &str, loss: Option<f64>, c: &ConfusionCounts, m: &Metrics, model: &str, seed: u64) -> Vec<String> {
    vec![
        split.to_string(),
        c.total().to_string(),
        loss.map(|l| l.to_string()).unwrap_or_default(),
        c.tp.to_string(),
        c.fp.to_string(),
        c.fn_.to_string(),
        c.tn.to_string(),
        m.precision.to_string(),
        m.recall.to_string(),
        m.f1.to_string(),
        m.precision_undefined.to_string(),
        m.recall_undefined.to_string(),
        m.f1_undefined.to_string(),
        model.to_string(),
        seed.to_string(),
    ]
}

fn qnn_metrics_csv(evals: &SplitEvaluations, seed: u64) -> CliResult<String> {
    let rows = [("train", &evals.train), ("validation", &evals.validation), ("test", &evals.test)]
        .into_iter()
        .map(|(s, e)| metrics_row(s, Some(e.loss), &e.counts, &e.metrics, "qnn", seed))
        .collect();
    csv_text(&METRICS_COLUMNS, rows)
}

fn print_metrics(rows: &[(&str, &Metrics)]) {
    println!("{:<11} {:>9} {:>9} {:>9}", "split", "precision", "recall", "f1");
    for (name, m) in rows {
        println!("{:<11} {:>9.4} {:>9.4} {:>9.4}", name, m.precision, m.recall, m.f1);
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PcaReportFile {
    pub config: RunConfig,
    pub dataset: String,
    pub explained_variance_ratio: Vec<f64>,
    pub cumulative: Vec<f64>,
}

pub fn pca_report(config: &RunConfig) -> CliResult<()> {
    let data = load(config)?;
    let ratios = explained_variance_profile(&data)?;
    let cumulative: Vec<f64> = ratios
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();
    println!("{:>9} {:>10} {:>10}", "component", "ratio", "cumulative");
    for (i, (r, c)) in ratios.iter().zip(&cumulative).enumerate() {
        println!("{:>9} {:>10.4} {:>10.4}", i + 1, r, c);
    }
    let dir = output_dir(config)?;
    let rows = ratios
        .iter()
        .zip(&cumulative)
        .enumerate()
        .map(|(i, (r, c))| vec![(i + 1).to_string(), r.to_string(), c.to_string()])
        .collect();
    write(&dir.join("pca_report.csv"), &csv_text(&["component", "explained_variance_ratio", "cumulative"], rows)?)?;
    write_json(
        &dir.join("pca_report.json"),
        &PcaReportFile {
            config: config.clone(),
            dataset: data.name,
            explained_variance_ratio: ratios,
            cumulative,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvaluations {
    pub train: Evaluation,
    pub validation: Evaluation,
    pub test: Evaluation,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub config: RunConfig,
    pub seed: u64,
    pub model: ModelFile,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PipelineArtifact {
    pub config: RunConfig,
    pub seed: u64,
    pub pipeline: FittedPipeline,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainArtifact {
    pub config: RunConfig,
    pub seed: u64,
    pub model_config: MultiVqcConfig,
    pub report: TrainReport,
    pub evaluation: SplitEvaluations,
}

fn evaluate_splits(model_file: &ModelFile, data: &SplitDataset, weights: &ClassWeights) -> CliResult<SplitEvaluations> {
    let (model, params) = model_file.instantiate()?;
    Ok(SplitEvaluations {
        train: evaluate(&model, &params, &data.train, weights)?,
        validation: evaluate(&model, &params, &data.validation, weights)?,
        test: evaluate(&model, &params, &data.test, weights)?,
    })
}

pub fn cmd_train(config: &RunConfig) -> CliResult<()> {
    let data = load(config)?;
    check_components(config.n_components, &data)?;
    let (prepared, pipeline) = prepare(&split_of(config, &data)?, config.n_components, config.angle_range)?;
    let model_config = config.model_config();
    let report = train(&model_config, &prepared, &config.train)?;
    info!("best epoch {} of {}", report.best_epoch, report.epochs.len());

    let mut params = mvqc_core::MultiVqcModel::new(model_config.clone())?.new_params();
    params.values_mut().copy_from_slice(&report.final_params);
    let model_file = ModelFile::new(model_config.clone(), &params);
    let evals = evaluate_splits(&model_file, &prepared, &report.class_weights)?;

    let seed = config.train.seed;
    let dir = output_dir(config)?;
    write_json(&dir.join("model.json"), &ModelArtifact { config: config.clone(), seed, model: model_file })?;
    write_json(&dir.join("pipeline.json"), &PipelineArtifact { config: config.clone(), seed, pipeline })?;
    write(&dir.join("metrics.csv"), &qnn_metrics_csv(&evals, seed)?)?;
    print_metrics(&[
        ("train", &evals.train.metrics),
        ("validation", &evals.validation.metrics),
        ("test", &evals.test.metrics),
    ]);
    write_json(
        &dir.join("report.json"),
        &TrainArtifact { config: config.clone(), seed, model_config, report, evaluation: evals },
    )?;
    println!("wrote model.json, pipeline.json, report.json, metrics.csv to {}", dir.display());
    Ok(())
}

/// Re-evaluates a trained run on the same split and writes `eval.csv`.
pub fn cmd_eval(run_dir: &Path, out: Option<&Path>) -> CliResult<()> {
    let model: ModelArtifact = read_json(&run_dir.join("model.json"))?;
    let pipeline: PipelineArtifact = read_json(&run_dir.join("pipeline.json"))?;
    if model.seed != pipeline.seed || model.config != pipeline.config {
        return Err(CliError::config(format!(
            "model.json and pipeline.json in {} come from different runs",
            run_dir.display()
        )));
    }
    let config = &model.config;
    let data = load(config)?;
    let s = split_of(config, &data)?;
    let p = &pipeline.pipeline;
    let prepared = SplitDataset {
        train: p.transform_dataset(&s.train)?,
        validation: p.transform_dataset(&s.validation)?,
        test: p.transform_dataset(&s.test)?,
        fractions: s.fractions,
        seed: s.seed,
    };
    let weights = compute_class_weights(&prepared.train.labels)?;
    let evals = evaluate_splits(&model.model, &prepared, &weights)?;
    print_metrics(&[
        ("train", &evals.train.metrics),
        ("validation", &evals.validation.metrics),
        ("test", &evals.test.metrics),
    ]);
    let path = out.map_or_else(|| run_dir.join("eval.csv"), Path::to_path_buf);
    write(&path, &qnn_metrics_csv(&evals, model.seed)?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BaselineArtifact {
    pub config: RunConfig,
    pub seed: u64,
    pub class_weights: ClassWeights,
    pub report: LogRegReport,
    pub train: Metrics,
    pub validation: Metrics,
    pub test: Metrics,
}

pub fn cmd_baseline(config: &RunConfig) -> CliResult<()> {
    let data = load(config)?;
    check_components(config.n_components, &data)?;
    let (prepared, _) = prepare(&split_of(config, &data)?, config.n_components, config.angle_range)?;
    let weights = compute_class_weights(&prepared.train.labels)?;
    let report = fit_logreg(&prepared, &weights, &config.train)?;
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    for (name, part) in prepared.parts() {
        let (c, m) = evaluate_logreg(&report.model, part)?;
        rows.push(metrics_row(name, None, &c, &m, "logreg", config.train.seed));
        metrics.push(m);
    }
    print_metrics(&[("train", &metrics[0]), ("validation", &metrics[1]), ("test", &metrics[2])]);
    let dir = output_dir(config)?;
    write(&dir.join("baseline_metrics.csv"), &csv_text(&METRICS_COLUMNS, rows)?)?;
    write_json(
        &dir.join("baseline.json"),
        &BaselineArtifact {
            config: config.clone(),
            seed: config.train.seed,
            class_weights: weights,
            report,
            train: metrics[0],
            validation: metrics[1],
            test: metrics[2],
        },
    )
}

/// Sweep settings that come from flags rather than the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub feature_counts: Vec<usize>,
    pub n_vqcs: Vec<usize>,
    pub max_layers: usize,
    pub include_baseline: bool,
    pub workers: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            feature_counts: vec![2],
            n_vqcs: vec![1, 2, 3],
            max_layers: DEFAULT_MAX_LAYERS,
            include_baseline: true,
            workers: 0,
        }
    }
}

/// Parses `a..b` (inclusive), `a,b,c` or a single number.
pub fn parse_range(text: &str) -> Result<Vec<usize>, String> {
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("'{s}' is not a count"));
    let values = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range {text}"));
        }
        (a..=b).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(values)
}

/// Stored next to each finished cell; a marker from a run with different
/// settings is ignored.
#[derive(Debug, Serialize, Deserialize)]
struct CellMarker {
    fingerprint: String,
    result: CellResult,
}

#[derive(Debug, Serialize)]
struct SweepArtifact<'a> {
    config: &'a RunConfig,
    seed: u64,
    table: &'a SweepTable,
}

fn fingerprint(config: &RunConfig, grid: &SweepGrid) -> String {
    // Everything that affects a cell result, output location and worker count excluded.
    let mut c = config.clone();
    c.output_dir = PathBuf::new();
    c.model = Default::default();
    c.n_components = 0;
    serde_json::to_string(&(c, grid.max_layers, grid.rescale)).expect("serialisable")
}

fn marker_name(key: &str) -> String {
    format!("{key}.json")
}

fn load_markers(dir: &Path, fingerprint: &str) -> HashMap<String, CellResult> {
    let mut done = HashMap::new();
    let Ok(entries) = fs::read_dir(dir) else {
        return done;
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        match read_json::<CellMarker>(&path) {
            Ok(m) if m.fingerprint == fingerprint => {
                done.insert(m.result.row.key.clone(), m.result);
            }
            Ok(_) => warn!("{}: written with different settings, recomputing", path.display()),
            Err(e) => warn!("ignoring unreadable marker {e}"),
        }
    }
    done
}

pub fn cmd_sweep(config: &RunConfig, settings: &SweepSettings) -> CliResult<()> {
    let data = load(config)?;
    let s = split_of(config, &data)?;
    let mut prepared = BTreeMap::new();
    for &k in &settings.feature_counts {
        check_components(k, &data)?;
        prepared.insert(k, prepare(&s, k, config.angle_range)?.0);
    }
    if let Some(&v) = settings.n_vqcs.iter().find(|&&v| v == 0 || v > mvqc_core::model::MAX_VQCS) {
        return Err(CliError::config(format!(
            "chain length {v} outside 1..={}",
            mvqc_core::model::MAX_VQCS
        )));
    }
    let grid = SweepGrid {
        n_vqcs: settings.n_vqcs.clone(),
        max_layers: settings.max_layers,
        rescale: config.model.rescale,
        include_baseline: settings.include_baseline,
        ..SweepGrid::full(settings.feature_counts.clone())
    };

    let dir = output_dir(config)?;
    let cells_dir = dir.join("cells");
    fs::create_dir_all(&cells_dir).map_err(|e| CliError::data(format!("{}: {e}", cells_dir.display())))?;
    let fp = fingerprint(config, &grid);
    let completed = load_markers(&cells_dir, &fp);
    let total = grid.cells().len() + if grid.include_baseline { grid.feature_counts.len() } else { 0 };
    info!("{total} cells, {} already complete", completed.len());

    let options = SweepOptions { workers: settings.workers, completed };
    let table = sweep(&grid, &prepared, &config.train, &options, |result| {
        let row = &result.row;
        match &row.error {
            Some(e) => warn!("cell {} failed: {e}", row.key),
            None => info!("cell {} done: validation F1 {:.4}", row.key, row.validation.f1),
        }
        let marker = CellMarker { fingerprint: fp.clone(), result: result.clone() };
        let path = cells_dir.join(marker_name(&row.key));
        let tmp = path.with_extension("tmp");
        let saved = serde_json::to_string_pretty(&marker)
            .map_err(|e| e.to_string())
            .and_then(|t| fs::write(&tmp, t).map_err(|e| e.to_string()))
            .and_then(|_| fs::rename(&tmp, &path).map_err(|e| e.to_string()));
        if let Err(e) = saved {
            warn!("could not save marker {}: {e}", path.display());
        }
    })?;

    write(&dir.join("sweep.csv"), &table.to_csv()?)?;
    write(&dir.join("summary.csv"), &table.summary_csv()?)?;
    write_json(&dir.join("sweep.json"), &SweepArtifact { config, seed: config.train.seed, table: &table })?;

    let ok = table.rows.iter().filter(|r| r.status == CellStatus::Ok).count();
    println!("{ok} of {} cells succeeded; results in {}", table.rows.len(), dir.display());
    println!("{:<28} {:>7} {:>7} {:>7}", "best cells", "val_f1", "test_f1", "params");
    for r in table.rows.iter().take(5) {
        println!("{:<28} {:>7.4} {:>7.4} {:>7}", r.key, r.validation.f1, r.test.f1, r.n_params);
    }
    if ok == 0 {
        return Err(CliError::numerical(format!("all {} sweep cells failed", table.rows.len())));
    }
    Ok(())
}
