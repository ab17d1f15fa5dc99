//! Mini-batch training of a chained VQC classifier with early stopping.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use crate::data::{Dataset, SplitDataset};
use crate::error::{Error, Result};
use crate::gradients::loss_gradient;
use crate::loss::{compute_class_weights, weighted_loss, ClassWeights};
use crate::metrics::{evaluate as score, ConfusionCounts, Metrics};
use crate::model::{MultiVqcConfig, MultiVqcModel};
use crate::params::ParamStore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Initial parameters are drawn uniformly from `[0, init_scale)`.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            patience: 5,
            learning_rate: 0.01,
            batch_size: 16,
            seed: 0,
            init_scale: TAU,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !self.init_scale.is_finite() || self.init_scale < 0.0 {
            return Err(Error::Config("init_scale must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Patience-based stopping rule on a monitored loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    waited: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            waited: 0,
        }
    }

    /// Records the loss of `epoch`. Returns `true` if it is a new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.waited = 0;
            true
        } else {
            self.waited += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.waited >= self.patience
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: Evaluation,
    pub validation: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (1-based) with the lowest validation loss.
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub final_params: Vec<f64>,
    pub stopped_early: bool,
    pub class_weights: ClassWeights,
    pub n_params: usize,
    pub config: TrainConfig,
}

impl TrainReport {
    pub fn best_record(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch - 1]
    }

    /// Trained parameters laid out for `model`.
    pub fn params_for(&self, model: &MultiVqcModel) -> Result<ParamStore> {
        let mut p = model.new_params();
        if p.len() != self.final_params.len() {
            return Err(Error::ModelDefinition(format!(
                "report holds {} parameters, model needs {}",
                self.final_params.len(),
                p.len()
            )));
        }
        p.values_mut().copy_from_slice(&self.final_params);
        Ok(p)
    }
}

/// Mean weighted loss and confusion counts over `data`.
pub fn evaluate(
    model: &MultiVqcModel,
    params: &ParamStore,
    data: &Dataset,
    weights: &ClassWeights,
) -> Result<Evaluation> {
    let outputs = data
        .features
        .par_iter()
        .map(|x| model.forward(params, x))
        .collect::<Result<Vec<_>>>()?;
    let loss = outputs
        .iter()
        .zip(&data.labels)
        .map(|(o, &l)| weighted_loss(o, l, weights))
        .sum::<f64>()
        / data.len().max(1) as f64;
    let predictions: Vec<usize> = outputs.iter().map(|o| o.predicted_class).collect();
    let (counts, metrics) = score(&predictions, &data.labels)?;
    Ok(Evaluation {
        loss,
        counts,
        metrics,
    })
}

/// Mean loss and gradient over the samples at `batch`. Per-sample results are
/// collected in index order before summation, so the result does not depend
/// on thread scheduling.
fn batch_gradient(
    model: &MultiVqcModel,
    params: &ParamStore,
    data: &Dataset,
    batch: &[usize],
    weights: &ClassWeights,
) -> Result<(f64, Vec<f64>)> {
    let per_sample = batch
        .par_iter()
        .map(|&i| loss_gradient(model, params, &data.features[i], data.labels[i], weights))
        .collect::<Result<Vec<_>>>()?;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    for (l, g) in &per_sample {
        loss += l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    let n = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

pub fn train(config: &MultiVqcConfig, data: &SplitDataset, tcfg: &TrainConfig) -> Result<TrainReport> {
    tcfg.validate()?;
    let model = MultiVqcModel::new(config.clone())?;
    if data.width() != model.input_width() {
        return Err(Error::Config(format!(
            "data has {} features but the model expects {}",
            data.width(),
            model.input_width()
        )));
    }
    let weights = compute_class_weights(&data.train.labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut params = model.new_params();
    params.randomize(&mut rng, tcfg.init_scale);

    let mut adam = Adam::new(params.len(), tcfg.learning_rate);
    let mut stopper = EarlyStopping::new(tcfg.patience);
    let mut best_params = params.values().to_vec();
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut stopped_early = false;

    for epoch in 1..=tcfg.max_epochs {
        order.shuffle(&mut rng);
        for (b, batch) in order.chunks(tcfg.batch_size).enumerate() {
            let (loss, grad) = batch_gradient(&model, &params, &data.train, batch, &weights)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite loss or gradient at epoch {epoch}, batch {b} (parameter norm {:.6e})",
                    params.norm()
                )));
            }
            adam.step(params.values_mut(), &grad);
        }
        let train_eval = evaluate(&model, &params, &data.train, &weights)?;
        let val_eval = evaluate(&model, &params, &data.validation, &weights)?;
        if !train_eval.loss.is_finite() || !val_eval.loss.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite epoch loss at epoch {epoch} (parameter norm {:.6e})",
                params.norm()
            )));
        }
        if stopper.observe(epoch, val_eval.loss) {
            best_params.copy_from_slice(params.values());
        }
        epochs.push(EpochRecord {
            epoch,
            train: train_eval,
            validation: val_eval,
        });
        if stopper.should_stop() {
            stopped_early = epoch < tcfg.max_epochs;
            break;
        }
    }

    Ok(TrainReport {
        best_epoch: stopper.best_epoch().expect("at least one epoch ran"),
        best_validation_loss: stopper.best(),
        epochs,
        final_params: best_params,
        stopped_early,
        class_weights: weights,
        n_params: model.n_params(),
        config: tcfg.clone(),
    })
}
