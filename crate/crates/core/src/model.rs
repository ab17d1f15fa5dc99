//! Chained VQC classifier.
//!
//! VQC `i` runs on its input angles and every qubit is read out with Pauli-Z.
//! Those expectations, mapped through [`RescaleMode`], are the angle-encoded
//! inputs of VQC `i + 1`. The last VQC reads one qubit per class; the class
//! scores go through a softmax.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::quantum::{Statevector, MAX_QUBITS};
use crate::templates::{build_vqc, AnsatzKind, Circuit, EncodingKind, VqcConfig};

pub const MAX_VQCS: usize = 3;
pub const MODEL_FORMAT: &str = "mvqc-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Maps an intermediate expectation `e ∈ [−1, 1]` to the next VQC's angle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RescaleMode {
    /// `e · π`
    #[default]
    Pi,
    /// `arccos(e)`
    ArcCos,
    /// `e`
    Identity,
}

/// Expectations are clamped this far inside ±1 before `arccos` so that its
/// derivative stays finite.
const ARCCOS_EDGE: f64 = 1e-9;

impl RescaleMode {
    pub fn apply(self, e: f64) -> f64 {
        match self {
            RescaleMode::Pi => e * PI,
            RescaleMode::ArcCos => e.clamp(-1.0 + ARCCOS_EDGE, 1.0 - ARCCOS_EDGE).acos(),
            RescaleMode::Identity => e,
        }
    }

    pub fn derivative(self, e: f64) -> f64 {
        match self {
            RescaleMode::Pi => PI,
            RescaleMode::ArcCos => {
                if e <= -1.0 + ARCCOS_EDGE || e >= 1.0 - ARCCOS_EDGE {
                    0.0
                } else {
                    -1.0 / (1.0 - e * e).sqrt()
                }
            }
            RescaleMode::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiVqcConfig {
    pub vqcs: Vec<VqcConfig>,
    pub n_classes: usize,
    #[serde(default)]
    pub rescale: RescaleMode,
    /// Qubits of the last VQC read out as class scores, in class order.
    /// Defaults to `0..n_classes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<Vec<usize>>,
}

impl MultiVqcConfig {
    /// A chain of `n_vqcs` VQCs of equal width sharing encoding, ansatz,
    /// reuploading and layer count, with the default rescale mode.
    pub fn chain(
        n_features: usize,
        n_vqcs: usize,
        encoding: EncodingKind,
        ansatz: AnsatzKind,
        reuploading: bool,
        n_layers: usize,
        n_classes: usize,
    ) -> Self {
        let vqcs = (0..n_vqcs)
            .map(|i| VqcConfig {
                n_qubits: n_features,
                encoding,
                ansatz,
                n_layers,
                reuploading,
                n_measured: if i + 1 == n_vqcs { n_classes } else { n_features },
            })
            .collect();
        MultiVqcConfig {
            vqcs,
            n_classes,
            rescale: RescaleMode::default(),
            readout: None,
        }
    }

    pub fn n_vqcs(&self) -> usize {
        self.vqcs.len()
    }

    pub fn input_width(&self) -> usize {
        self.vqcs.first().map_or(0, |v| v.n_qubits)
    }

    pub fn param_count(&self) -> usize {
        self.vqcs.iter().map(VqcConfig::param_count).sum()
    }

    /// Sets the same layer count on every VQC.
    pub fn with_layers(mut self, n_layers: usize) -> Self {
        self.vqcs.iter_mut().for_each(|v| v.n_layers = n_layers);
        self
    }

    pub fn readout_qubits(&self) -> Vec<usize> {
        self.readout
            .clone()
            .unwrap_or_else(|| (0..self.n_classes).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigViolation {
    pub vqc_index: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.vqc_index {
            Some(i) => write!(f, "VQC {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Checks every chain invariant and reports all violations, not just the
/// first one.
pub fn validate_config(config: &MultiVqcConfig) -> std::result::Result<(), Vec<ConfigViolation>> {
    let mut violations = Vec::new();
    let mut push = |vqc_index: Option<usize>, message: String| {
        violations.push(ConfigViolation { vqc_index, message })
    };

    let n = config.vqcs.len();
    if !(1..=MAX_VQCS).contains(&n) {
        push(None, format!("chain has {n} VQCs; supported range is 1..={MAX_VQCS}"));
    }
    if config.n_classes < 2 {
        push(None, format!("n_classes = {} must be at least 2", config.n_classes));
    }
    for (i, vqc) in config.vqcs.iter().enumerate() {
        if !(2..=MAX_QUBITS).contains(&vqc.n_qubits) {
            push(
                Some(i),
                format!("width {} outside 2..={MAX_QUBITS}", vqc.n_qubits),
            );
        }
        if vqc.n_layers == 0 {
            push(Some(i), "n_layers must be at least 1".into());
        }
        if vqc.n_measured > vqc.n_qubits {
            push(
                Some(i),
                format!("measures {} of {} qubits", vqc.n_measured, vqc.n_qubits),
            );
        }
        let last = i + 1 == n;
        if !last && vqc.n_measured != vqc.n_qubits {
            push(
                Some(i),
                format!(
                    "intermediate VQC must measure every qubit ({} of {} measured)",
                    vqc.n_measured, vqc.n_qubits
                ),
            );
        }
        if last && vqc.n_measured != config.n_classes {
            push(
                Some(i),
                format!(
                    "final VQC measures {} qubits but there are {} classes",
                    vqc.n_measured, config.n_classes
                ),
            );
        }
        if i > 0 {
            let prev = &config.vqcs[i - 1];
            if vqc.n_qubits != prev.n_measured {
                push(
                    Some(i),
                    format!(
                        "input width {} does not match {} outputs of VQC {}",
                        vqc.n_qubits,
                        prev.n_measured,
                        i - 1
                    ),
                );
            }
        }
    }
    if let (Some(readout), Some(last)) = (&config.readout, config.vqcs.last()) {
        let mut seen = [false; MAX_QUBITS];
        let distinct = readout
            .iter()
            .all(|&q| q < MAX_QUBITS && !std::mem::replace(&mut seen[q], true));
        if readout.len() != config.n_classes
            || !distinct
            || readout.iter().any(|&q| q >= last.n_qubits)
        {
            push(
                Some(n - 1),
                format!(
                    "readout {readout:?} must list {} distinct qubits below {}",
                    config.n_classes, last.n_qubits
                ),
            );
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutput {
    pub class_scores: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub predicted_class: usize,
}

impl ModelOutput {
    pub fn from_scores(class_scores: Vec<f64>) -> Self {
        let probabilities = softmax(&class_scores);
        let predicted_class = argmax(&probabilities);
        ModelOutput {
            class_scores,
            probabilities,
            predicted_class,
        }
    }
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

/// Intermediate values of one forward pass, kept for differentiation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input angles of each VQC.
    pub inputs: Vec<Vec<f64>>,
    /// Measured expectations of each VQC (`n_measured` entries).
    pub outputs: Vec<Vec<f64>>,
    pub output: ModelOutput,
}

/// A validated chain with its circuits built.
#[derive(Debug, Clone)]
pub struct MultiVqcModel {
    config: MultiVqcConfig,
    circuits: Vec<Circuit>,
    offsets: Vec<usize>,
    readout: Vec<usize>,
}

impl MultiVqcModel {
    pub fn new(config: MultiVqcConfig) -> Result<Self> {
        validate_config(&config).map_err(Error::InvalidModel)?;
        let circuits = config
            .vqcs
            .iter()
            .map(build_vqc)
            .collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(circuits.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for c in &circuits {
            acc += c.n_params;
            offsets.push(acc);
        }
        let readout = config.readout_qubits();
        Ok(MultiVqcModel {
            config,
            circuits,
            offsets,
            readout,
        })
    }

    pub fn config(&self) -> &MultiVqcConfig {
        &self.config
    }

    pub fn circuits(&self) -> &[Circuit] {
        &self.circuits
    }

    pub fn n_params(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn input_width(&self) -> usize {
        self.config.input_width()
    }

    pub fn readout(&self) -> &[usize] {
        &self.readout
    }

    /// Flat parameter range of VQC `index`.
    pub fn param_range(&self, index: usize) -> std::ops::Range<usize> {
        self.offsets[index]..self.offsets[index + 1]
    }

    pub fn new_params(&self) -> ParamStore {
        ParamStore::zeros(self.circuits.iter().map(|c| c.n_params).collect())
    }

    fn check_inputs(&self, params: &ParamStore, features: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::ModelDefinition(format!(
                "model has {} parameters, {} supplied",
                self.n_params(),
                params.len()
            )));
        }
        if features.len() != self.input_width() {
            return Err(Error::ModelDefinition(format!(
                "model expects {} features, got {}",
                self.input_width(),
                features.len()
            )));
        }
        Ok(())
    }

    /// Number of leading qubits of VQC `index` whose expectations are needed.
    pub(crate) fn read_width(&self, index: usize) -> usize {
        if index + 1 == self.circuits.len() {
            self.readout.iter().copied().max().map_or(0, |m| m + 1)
        } else {
            self.circuits[index].n_qubits
        }
    }

    pub fn forward(&self, params: &ParamStore, features: &[f64]) -> Result<ModelOutput> {
        Ok(self.forward_trace(params, features)?.output)
    }

    pub fn forward_trace(&self, params: &ParamStore, features: &[f64]) -> Result<ForwardTrace> {
        self.check_inputs(params, features)?;
        let values = params.values();
        let mut inputs = Vec::with_capacity(self.circuits.len());
        let mut outputs = Vec::with_capacity(self.circuits.len());
        let mut current = features.to_vec();
        for (i, circuit) in self.circuits.iter().enumerate() {
            let theta = &values[self.param_range(i)];
            let mut state = Statevector::zero(circuit.n_qubits)?;
            for gate in &circuit.gates {
                let angle = gate.resolve_angle(theta, &current)?;
                state.apply_unchecked(gate, angle);
            }
            let mut expectations = vec![0.0; self.read_width(i)];
            state.expectations_z_into(&mut expectations);
            if expectations.iter().any(|e| !e.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite expectation in VQC {i}"
                )));
            }
            let next: Vec<f64> = expectations
                .iter()
                .map(|&e| self.config.rescale.apply(e))
                .collect();
            inputs.push(std::mem::replace(&mut current, next));
            outputs.push(expectations);
        }
        let last = outputs.last().expect("validated chain is non-empty");
        let scores = self.readout.iter().map(|&q| last[q]).collect();
        Ok(ForwardTrace {
            inputs,
            outputs,
            output: ModelOutput::from_scores(scores),
        })
    }
}

/// On-disk model: configuration plus flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config: MultiVqcConfig,
    pub params: Vec<f64>,
}

impl ModelFile {
    pub fn new(config: MultiVqcConfig, params: &ParamStore) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            config,
            params: params.values().to_vec(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Rebuilds the model and parameter store.
    pub fn instantiate(&self) -> Result<(MultiVqcModel, ParamStore)> {
        let model = MultiVqcModel::new(self.config.clone())?;
        let mut params = model.new_params();
        if self.params.len() != params.len() {
            return Err(Error::ModelDefinition(format!(
                "model file has {} parameters, configuration needs {}",
                self.params.len(),
                params.len()
            )));
        }
        params.values_mut().copy_from_slice(&self.params);
        Ok((model, params))
    }
}
