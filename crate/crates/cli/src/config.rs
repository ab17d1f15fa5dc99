//! Run configuration: a JSON file, then dotted `section.field=value`
//! overrides, then the output directory from the environment or a flag.

use std::path::{Path, PathBuf};

use mvqc_core::data::{AngleRange, DEFAULT_FRACTIONS};
use mvqc_core::trainer::TrainConfig;
use mvqc_core::{AnsatzKind, EncodingKind, MultiVqcConfig, RescaleMode};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const OUTPUT_DIR_ENV: &str = "MVQC_OUTPUT_DIR";
pub const DATA_DIR_ENV: &str = "MVQC_DATA_DIR";

/// Shape of the chained model; the qubit count comes from `n_components`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub n_vqcs: usize,
    pub encoding: EncodingKind,
    pub ansatz: AnsatzKind,
    pub reuploading: bool,
    pub n_layers: usize,
    pub rescale: RescaleMode,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            n_vqcs: 1,
            encoding: EncodingKind::Rx,
            ansatz: AnsatzKind::Basic,
            reuploading: false,
            n_layers: 1,
            rescale: RescaleMode::Pi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// A CSV path, or a bare name looked up as `<data dir>/<name>.csv`.
    pub dataset: String,
    /// Defaults to `schemas/<dataset name>.json`.
    pub schema: Option<PathBuf>,
    pub n_components: usize,
    pub angle_range: AngleRange,
    pub split_fractions: [f64; 3],
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: String::new(),
            schema: None,
            n_components: 2,
            angle_range: AngleRange::ZeroPi,
            split_fractions: DEFAULT_FRACTIONS,
            model: ModelSpec::default(),
            train: TrainConfig::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl RunConfig {
    pub fn model_config(&self) -> MultiVqcConfig {
        let m = &self.model;
        let mut c =
            MultiVqcConfig::chain(self.n_components, m.n_vqcs, m.encoding, m.ansatz, m.reuploading, m.n_layers, 2);
        c.rescale = m.rescale;
        c
    }

    pub fn dataset_path(&self) -> PathBuf {
        PathBuf::from(&self.dataset)
    }

    pub fn schema_path(&self) -> PathBuf {
        self.schema.clone().unwrap_or_default()
    }
}

/// Everything the command line can contribute to a [`RunConfig`].
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub config_file: Option<PathBuf>,
    pub dataset: Option<String>,
    pub schema: Option<PathBuf>,
    pub n_components: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// `dotted.key=value` pairs.
    pub set: Vec<String>,
}

/// Sets `path` (dot separated, dashes read as underscores) in `root`. The key
/// must already exist, so typos are reported instead of ignored.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override '{assignment}' is not of the form key=value")))?;
    let mut slot = &mut *root;
    for part in key.split('.') {
        let field = part.replace('-', "_");
        slot = slot
            .as_object_mut()
            .and_then(|o| o.get_mut(&field))
            .ok_or_else(|| CliError::config(format!("unknown configuration key '{key}'")))?;
    }
    let parsed = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    // A path or name that happens to look like JSON stays a string.
    *slot = if slot.is_string() && !parsed.is_string() { Value::String(raw.to_string()) } else { parsed };
    Ok(())
}

fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("data"), PathBuf::from)
}

fn absolute(path: &Path) -> PathBuf {
    path.canonicalize().unwrap_or_else(|_| path.to_path_buf())
}

/// Builds the resolved configuration and checks that referenced files exist.
pub fn resolve(o: &Overrides) -> CliResult<RunConfig> {
    let mut value = serde_json::to_value(RunConfig::default()).expect("default config serialises");
    if let Some(path) = &o.config_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let file: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        value = serde_json::to_value(file).expect("config serialises");
    }
    for s in &o.set {
        apply_override(&mut value, s)?;
    }
    let mut config: RunConfig =
        serde_json::from_value(value).map_err(|e| CliError::config(format!("invalid configuration: {e}")))?;

    if let Some(d) = &o.dataset {
        config.dataset = d.clone();
    }
    if let Some(s) = &o.schema {
        config.schema = Some(s.clone());
    }
    if let Some(k) = o.n_components {
        config.n_components = k;
    }
    if let Some(seed) = o.seed {
        config.train.seed = seed;
    }
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        config.output_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &o.output_dir {
        config.output_dir = dir.clone();
    }

    if config.dataset.is_empty() {
        return Err(CliError::config("no dataset given (use --dataset or the config file)"));
    }
    let mut path = PathBuf::from(&config.dataset);
    let bare_name = path.extension().is_none() && path.components().count() == 1;
    if bare_name && !path.exists() {
        path = data_dir().join(format!("{}.csv", config.dataset));
    }
    if !path.is_file() {
        return Err(CliError::config(format!("dataset file {} does not exist", path.display())));
    }
    let schema = match &config.schema {
        Some(s) => s.clone(),
        None => {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            PathBuf::from("schemas").join(format!("{stem}.json"))
        }
    };
    if !schema.is_file() {
        return Err(CliError::config(format!("schema file {} does not exist", schema.display())));
    }
    config.dataset = absolute(&path).to_string_lossy().into_owned();
    config.schema = Some(absolute(&schema));
    config.train.validate()?;
    if config.n_components == 0 {
        return Err(CliError::config("n_components must be at least 1"));
    }
    Ok(config)
}
