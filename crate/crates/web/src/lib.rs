//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Three operations are exposed: training a small chained classifier on a
//! two-angle toy problem, sampling its decision surface, and the PCA
//! explained-variance curve of a pasted CSV.

use std::f64::consts::PI;
use std::path::Path;

use mvqc_core::data::{explained_variance_profile, read_csv, Dataset, DatasetSchema, SplitDataset};
use mvqc_core::trainer::{train, TrainConfig};
use mvqc_core::{AnsatzKind, EncodingKind, MultiVqcConfig, MultiVqcModel, ParamStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

/// Label is 1 when exactly one angle is above π/2. Points within `margin`
/// of either boundary are rejected.
pub fn xor_points(n: usize, seed: u64, margin: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while features.len() < n {
        let x: [f64; 2] = [rng.gen_range(0.0..PI), rng.gen_range(0.0..PI)];
        if x.iter().any(|v| (v - PI / 2.0).abs() < margin) {
            continue;
        }
        labels.push(usize::from((x[0] > PI / 2.0) != (x[1] > PI / 2.0)));
        features.push(x.to_vec());
    }
    Dataset::new("xor", features, labels, vec!["x0".into(), "x1".into()]).expect("well-formed toy data")
}

fn parse_ansatz(name: &str) -> Result<AnsatzKind, String> {
    match name {
        "basic" => Ok(AnsatzKind::Basic),
        "strongly" => Ok(AnsatzKind::Strongly),
        other => Err(format!("unknown ansatz '{other}' (basic or strongly)")),
    }
}

/// A two-qubit chain trained in the page.
#[wasm_bindgen]
pub struct Demo {
    model: MultiVqcModel,
    params: ParamStore,
    data: SplitDataset,
    seed: u64,
}

impl Demo {
    pub fn create(n_vqcs: usize, ansatz: &str, reuploading: bool, layers: usize, seed: u64) -> Result<Demo, String> {
        let ansatz = parse_ansatz(ansatz)?;
        let config = MultiVqcConfig::chain(2, n_vqcs, EncodingKind::Ry, ansatz, reuploading, layers, 2);
        let model = MultiVqcModel::new(config).map_err(|e| e.to_string())?;
        let mut params = model.new_params();
        params.randomize(&mut ChaCha8Rng::seed_from_u64(seed), 2.0 * PI);
        let data = SplitDataset {
            train: xor_points(60, seed, 0.15),
            validation: xor_points(30, seed.wrapping_add(1), 0.15),
            test: xor_points(30, seed.wrapping_add(2), 0.15),
            fractions: [0.5, 0.25, 0.25],
            seed,
        };
        Ok(Demo { model, params, data, seed })
    }

    /// Trains from a fresh initialisation; returns (train loss, validation
    /// loss) per epoch.
    pub fn fit(&mut self, epochs: usize, learning_rate: f64) -> Result<Vec<(f64, f64)>, String> {
        let tcfg = TrainConfig {
            max_epochs: epochs,
            patience: epochs.max(1),
            learning_rate,
            batch_size: 8,
            seed: self.seed,
            ..Default::default()
        };
        let report = train(self.model.config(), &self.data, &tcfg).map_err(|e| e.to_string())?;
        self.params = report.params_for(&self.model).map_err(|e| e.to_string())?;
        Ok(report.epochs.iter().map(|r| (r.train.loss, r.validation.loss)).collect())
    }

    /// Class-1 probability on a `resolution × resolution` grid over [0, π]²,
    /// row-major with the first angle along rows.
    pub fn surface_grid(&self, resolution: usize) -> Result<Vec<f64>, String> {
        let step = if resolution > 1 { PI / (resolution - 1) as f64 } else { 0.0 };
        let mut out = Vec::with_capacity(resolution * resolution);
        for i in 0..resolution {
            for j in 0..resolution {
                let x = [i as f64 * step, j as f64 * step];
                let o = self.model.forward(&self.params, &x).map_err(|e| e.to_string())?;
                out.push(o.probabilities[1]);
            }
        }
        Ok(out)
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(n_vqcs: usize, ansatz: &str, reuploading: bool, layers: usize, seed: u32) -> Result<Demo, JsError> {
        Demo::create(n_vqcs, ansatz, reuploading, layers, u64::from(seed)).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = paramCount)]
    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Flat `[train_0, val_0, train_1, val_1, ...]`.
    pub fn train(&mut self, epochs: usize, learning_rate: f64) -> Result<Vec<f64>, JsError> {
        let curve = self.fit(epochs, learning_rate).map_err(|e| JsError::new(&e))?;
        Ok(curve.into_iter().flat_map(|(t, v)| [t, v]).collect())
    }

    pub fn surface(&self, resolution: usize) -> Result<Vec<f64>, JsError> {
        self.surface_grid(resolution).map_err(|e| JsError::new(&e))
    }

    /// Flat `[x0, x1, label, ...]` of the training points.
    pub fn points(&self) -> Vec<f64> {
        let d = &self.data.train;
        d.features.iter().zip(&d.labels).flat_map(|(x, &l)| [x[0], x[1], l as f64]).collect()
    }
}

/// Per-component explained-variance ratios of CSV text with a header row.
/// `label_map` is `"M=1,B=0"`-style text, empty for numeric 0/1 labels.
pub fn variance_profile(csv_text: &str, label_column: &str, label_map: &str) -> Result<Vec<f64>, String> {
    let mut schema = DatasetSchema {
        name: "pasted".into(),
        label_column: label_column.trim().into(),
        drop_columns: Vec::new(),
        label_map: Default::default(),
        expected_rows: None,
        expected_features: None,
        expected_positive_fraction: None,
    };
    for pair in label_map.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (raw, class) = pair.split_once('=').ok_or_else(|| format!("label map entry '{pair}' is not raw=class"))?;
        let class: usize = class.trim().parse().map_err(|_| format!("class in '{pair}' must be 0 or 1"))?;
        schema.label_map.insert(raw.trim().to_string(), class);
    }
    let data = read_csv(csv_text.as_bytes(), Path::new("pasted"), &schema).map_err(|e| e.to_string())?;
    explained_variance_profile(&data).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = pcaVariance)]
pub fn pca_variance(csv_text: &str, label_column: &str, label_map: &str) -> Result<Vec<f64>, JsError> {
    variance_profile(csv_text, label_column, label_map).map_err(|e| JsError::new(&e))
}
