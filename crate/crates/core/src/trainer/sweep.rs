//! Hyperparameter grid over feature count × chain length × encoding ×
//! reuploading × ansatz, with a layer search in every cell.
//!
//! Each cell draws its RNG seed from the base seed and the cell key, so a
//! cell's result does not depend on worker count, execution order, or which
//! other cells are in the grid.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::{select_layers, LayerSearchReport, DEFAULT_MAX_LAYERS};
use super::train::{evaluate, TrainConfig};
use crate::data::SplitDataset;
use crate::error::{Error, Result};
use crate::logreg::{evaluate_logreg, fit_logreg};
use crate::loss::compute_class_weights;
use crate::metrics::Metrics;
use crate::model::{MultiVqcConfig, MultiVqcModel, RescaleMode};
use crate::templates::{AnsatzKind, EncodingKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub feature_counts: Vec<usize>,
    pub n_vqcs: Vec<usize>,
    pub encodings: Vec<EncodingKind>,
    pub reuploading: Vec<bool>,
    pub ansatzes: Vec<AnsatzKind>,
    pub max_layers: usize,
    pub rescale: RescaleMode,
    pub include_baseline: bool,
}

impl SweepGrid {
    /// Every encoding, ansatz, reuploading choice and chain length 1..=3.
    pub fn full(feature_counts: Vec<usize>) -> Self {
        SweepGrid {
            feature_counts,
            n_vqcs: vec![1, 2, 3],
            encodings: EncodingKind::ALL.to_vec(),
            reuploading: vec![true, false],
            ansatzes: AnsatzKind::ALL.to_vec(),
            max_layers: DEFAULT_MAX_LAYERS,
            rescale: RescaleMode::Pi,
            include_baseline: true,
        }
    }

    pub fn cells(&self) -> Vec<SweepCell> {
        let mut cells = Vec::new();
        for &n_features in &self.feature_counts {
            for &n_vqcs in &self.n_vqcs {
                for &encoding in &self.encodings {
                    for &reuploading in &self.reuploading {
                        for &ansatz in &self.ansatzes {
                            cells.push(SweepCell {
                                n_features,
                                n_vqcs,
                                encoding,
                                reuploading,
                                ansatz,
                                rescale: self.rescale,
                            });
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SweepCell {
    pub n_features: usize,
    pub n_vqcs: usize,
    pub encoding: EncodingKind,
    pub reuploading: bool,
    pub ansatz: AnsatzKind,
    pub rescale: RescaleMode,
}

impl SweepCell {
    pub fn key(&self) -> String {
        format!(
            "f{}-v{}-{}-{}-{}",
            self.n_features,
            self.n_vqcs,
            self.encoding.label(),
            if self.reuploading { "reup" } else { "noreup" },
            self.ansatz.label()
        )
    }

    pub fn config(&self, n_layers: usize) -> MultiVqcConfig {
        let mut c = MultiVqcConfig::chain(
            self.n_features,
            self.n_vqcs,
            self.encoding,
            self.ansatz,
            self.reuploading,
            n_layers,
            2,
        );
        c.rescale = self.rescale;
        c
    }
}

/// Mixes a base seed with a string key into an independent stream seed.
pub fn derive_seed(base: u64, key: &str) -> u64 {
    // FNV-1a then splitmix64 finalisation.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = base ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub key: String,
    /// "qnn" or "logreg".
    pub model: String,
    pub n_features: usize,
    pub n_vqcs: Option<usize>,
    pub encoding: Option<EncodingKind>,
    pub reuploading: Option<bool>,
    pub ansatz: Option<AnsatzKind>,
    pub layers: Option<usize>,
    pub n_params: usize,
    pub seed: u64,
    pub train: Metrics,
    pub validation: Metrics,
    pub test: Metrics,
    pub status: CellStatus,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub row: SweepRow,
    pub layer_search: Option<LayerSearchReport>,
}

impl CellResult {
    pub fn failed(mut row: SweepRow, error: &Error) -> Self {
        row.status = CellStatus::Failed;
        row.error = Some(error.to_string());
        CellResult {
            row,
            layer_search: None,
        }
    }
}

fn blank_row(cell: &SweepCell, seed: u64) -> SweepRow {
    SweepRow {
        key: cell.key(),
        model: "qnn".into(),
        n_features: cell.n_features,
        n_vqcs: Some(cell.n_vqcs),
        encoding: Some(cell.encoding),
        reuploading: Some(cell.reuploading),
        ansatz: Some(cell.ansatz),
        layers: None,
        n_params: 0,
        seed,
        train: Metrics::default(),
        validation: Metrics::default(),
        test: Metrics::default(),
        status: CellStatus::Ok,
        error: None,
    }
}

/// Layer search plus train/validation/test scoring of one grid cell. Failures
/// are captured in the row instead of propagated.
pub fn run_cell(cell: &SweepCell, data: &SplitDataset, tcfg: &TrainConfig, max_layers: usize) -> CellResult {
    let seed = derive_seed(tcfg.seed, &cell.key());
    let row = blank_row(cell, seed);
    match run_cell_inner(cell, data, tcfg, max_layers, seed, row.clone()) {
        Ok(r) => r,
        Err(e) => CellResult::failed(row, &e),
    }
}

fn run_cell_inner(
    cell: &SweepCell,
    data: &SplitDataset,
    tcfg: &TrainConfig,
    max_layers: usize,
    seed: u64,
    mut row: SweepRow,
) -> Result<CellResult> {
    let cell_cfg = TrainConfig { seed, ..tcfg.clone() };
    let search = select_layers(&cell.config(1), data, &cell_cfg, max_layers)?;
    let best = search
        .best_report
        .as_ref()
        .ok_or_else(|| Error::Numerical("layer search produced no model".into()))?;
    let model = MultiVqcModel::new(cell.config(search.chosen_layers))?;
    let params = best.params_for(&model)?;
    let w = &best.class_weights;
    row.layers = Some(search.chosen_layers);
    row.n_params = model.n_params();
    row.train = evaluate(&model, &params, &data.train, w)?.metrics;
    row.validation = evaluate(&model, &params, &data.validation, w)?.metrics;
    row.test = evaluate(&model, &params, &data.test, w)?.metrics;
    Ok(CellResult {
        row,
        layer_search: Some(search),
    })
}

pub fn baseline_key(n_features: usize) -> String {
    format!("f{n_features}-logreg")
}

pub fn run_baseline(n_features: usize, data: &SplitDataset, tcfg: &TrainConfig) -> CellResult {
    let key = baseline_key(n_features);
    let row = SweepRow {
        key: key.clone(),
        model: "logreg".into(),
        n_features,
        n_vqcs: None,
        encoding: None,
        reuploading: None,
        ansatz: None,
        layers: None,
        n_params: n_features + 1,
        seed: derive_seed(tcfg.seed, &key),
        train: Metrics::default(),
        validation: Metrics::default(),
        test: Metrics::default(),
        status: CellStatus::Ok,
        error: None,
    };
    let run = || -> Result<SweepRow> {
        let w = compute_class_weights(&data.train.labels)?;
        let fit = fit_logreg(data, &w, tcfg)?;
        let mut r = row.clone();
        r.train = evaluate_logreg(&fit.model, &data.train)?.1;
        r.validation = evaluate_logreg(&fit.model, &data.validation)?.1;
        r.test = evaluate_logreg(&fit.model, &data.test)?.1;
        Ok(r)
    };
    match run() {
        Ok(row) => CellResult {
            row,
            layer_search: None,
        },
        Err(e) => CellResult::failed(row, &e),
    }
}

/// Orders rows by validation F1 (descending), then fewer parameters, then
/// fewer VQCs, then key. Failed rows go last.
pub fn rank_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        (a.status == CellStatus::Failed)
            .cmp(&(b.status == CellStatus::Failed))
            .then(b.validation.f1.total_cmp(&a.validation.f1))
            .then(a.n_params.cmp(&b.n_params))
            .then(a.n_vqcs.unwrap_or(0).cmp(&b.n_vqcs.unwrap_or(0)))
            .then(a.key.cmp(&b.key))
    });
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub grid: SweepGrid,
    pub train_config: TrainConfig,
    /// Ranked rows.
    pub rows: Vec<SweepRow>,
    /// Cell results keyed by cell key, with layer-search curves.
    pub cells: BTreeMap<String, CellResult>,
}

pub const CSV_COLUMNS: [&str; 24] = [
    "rank", "key", "model", "feat", "n_vqcs", "enc", "reup", "ansatz", "layers", "n_params", "seed",
    "train_p", "train_r", "train_f1", "val_p", "val_r", "val_f1", "test_p", "test_r", "test_f1",
    "status", "error", "val_f1_undefined", "test_f1_undefined",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS)?;
        for (rank, r) in self.rows.iter().enumerate() {
            w.write_record([
                (rank + 1).to_string(),
                r.key.clone(),
                r.model.clone(),
                r.n_features.to_string(),
                opt(r.n_vqcs),
                opt(r.encoding.map(|e| e.label())),
                opt(r.reuploading.map(|b| if b { "True" } else { "False" })),
                opt(r.ansatz.map(|a| a.label())),
                opt(r.layers),
                r.n_params.to_string(),
                r.seed.to_string(),
                r.train.precision.to_string(),
                r.train.recall.to_string(),
                r.train.f1.to_string(),
                r.validation.precision.to_string(),
                r.validation.recall.to_string(),
                r.validation.f1.to_string(),
                r.test.precision.to_string(),
                r.test.recall.to_string(),
                r.test.f1.to_string(),
                match r.status {
                    CellStatus::Ok => "ok".into(),
                    CellStatus::Failed => "failed".into(),
                },
                r.error.clone().unwrap_or_default(),
                r.validation.f1_undefined.to_string(),
                r.test.f1_undefined.to_string(),
            ])?;
        }
        csv_string(w)
    }

    /// Best row (by ranking) for each feature count and chain length, plus the
    /// logistic baseline, as `feat,group,key,val_f1,test_p,test_r,test_f1`.
    pub fn summary_csv(&self) -> Result<String> {
        let mut best: BTreeMap<(usize, String), &SweepRow> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.status == CellStatus::Ok) {
            let group = match r.n_vqcs {
                Some(v) => format!("{v}vqc"),
                None => r.model.clone(),
            };
            best.entry((r.n_features, group)).or_insert(r);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["feat", "group", "key", "val_f1", "test_p", "test_r", "test_f1"])?;
        for ((feat, group), r) in best {
            w.write_record([
                feat.to_string(),
                group,
                r.key.clone(),
                r.validation.f1.to_string(),
                r.test.precision.to_string(),
                r.test.recall.to_string(),
                r.test.f1.to_string(),
            ])?;
        }
        csv_string(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
    /// Results of cells finished by an earlier run, keyed by cell key.
    pub completed: HashMap<String, CellResult>,
}

/// Runs every grid cell (and the baseline per feature count) and ranks the
/// results. `data` holds the prepared split for each feature count.
/// `on_done` is called as each newly computed cell finishes.
pub fn sweep<F>(
    grid: &SweepGrid,
    data: &BTreeMap<usize, SplitDataset>,
    tcfg: &TrainConfig,
    options: &SweepOptions,
    on_done: F,
) -> Result<SweepTable>
where
    F: Fn(&CellResult) + Sync,
{
    tcfg.validate()?;
    enum Job {
        Cell(SweepCell),
        Baseline(usize),
    }
    let mut jobs: Vec<(String, Job)> = grid.cells().into_iter().map(|c| (c.key(), Job::Cell(c))).collect();
    if grid.include_baseline {
        jobs.extend(grid.feature_counts.iter().map(|&f| (baseline_key(f), Job::Baseline(f))));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let results: Vec<CellResult> = pool.install(|| {
        jobs.par_iter()
            .map(|(key, job)| {
                if let Some(done) = options.completed.get(key) {
                    return done.clone();
                }
                let n_features = match job {
                    Job::Cell(c) => c.n_features,
                    Job::Baseline(f) => *f,
                };
                let result = match (job, data.get(&n_features)) {
                    (Job::Cell(c), Some(d)) => run_cell(c, d, tcfg, grid.max_layers),
                    (Job::Baseline(f), Some(d)) => run_baseline(*f, d, tcfg),
                    (Job::Cell(c), None) => CellResult::failed(
                        blank_row(c, derive_seed(tcfg.seed, key)),
                        &Error::Data(format!("no prepared data with {n_features} features")),
                    ),
                    (Job::Baseline(f), None) => {
                        let mut r = run_baseline(*f, &empty_split(), tcfg);
                        r.row.error = Some(format!("no prepared data with {f} features"));
                        r.row.status = CellStatus::Failed;
                        r
                    }
                };
                on_done(&result);
                result
            })
            .collect()
    });

    let mut rows: Vec<SweepRow> = results.iter().map(|r| r.row.clone()).collect();
    rank_rows(&mut rows);
    let cells = results.into_iter().map(|r| (r.row.key.clone(), r)).collect();
    Ok(SweepTable {
        grid: grid.clone(),
        train_config: tcfg.clone(),
        rows,
        cells,
    })
}

fn empty_split() -> SplitDataset {
    let empty = crate::data::Dataset {
        name: String::new(),
        features: Vec::new(),
        labels: Vec::new(),
        feature_names: Vec::new(),
    };
    SplitDataset {
        train: empty.clone(),
        validation: empty.clone(),
        test: empty,
        fractions: [0.0; 3],
        seed: 0,
    }
}
