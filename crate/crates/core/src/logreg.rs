//! Class-weighted logistic regression, trained full-batch with Adam and the
//! same early-stopping rule as the quantum models.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SplitDataset};
use crate::error::{Error, Result};
use crate::loss::{ClassWeights, PROB_FLOOR};
use crate::metrics::{evaluate as score, ConfusionCounts, Metrics};
use crate::trainer::{Adam, EarlyStopping, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegReport {
    pub model: LogRegModel,
    pub best_epoch: usize,
    pub validation_losses: Vec<f64>,
    pub stopped_early: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogRegModel {
    pub fn zeros(width: usize) -> Self {
        LogRegModel {
            weights: vec![0.0; width],
            bias: 0.0,
        }
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Class and probability of class 1; class 1 when the probability is ≥ 0.5.
pub fn predict_logreg(model: &LogRegModel, features: &[f64]) -> Result<(usize, f64)> {
    if features.len() != model.weights.len() {
        return Err(Error::ModelDefinition(format!(
            "logistic model has {} weights, got {} features",
            model.weights.len(),
            features.len()
        )));
    }
    let p = sigmoid(model.logit(features));
    Ok((usize::from(p >= 0.5), p))
}

fn sample_loss(p: f64, label: usize, weights: &ClassWeights) -> f64 {
    let q = if label == 1 { p } else { 1.0 - p };
    -weights.weight(label) * q.max(PROB_FLOOR).ln()
}

fn mean_loss(model: &LogRegModel, data: &Dataset, weights: &ClassWeights) -> f64 {
    data.features
        .iter()
        .zip(&data.labels)
        .map(|(x, &l)| sample_loss(sigmoid(model.logit(x)), l, weights))
        .sum::<f64>()
        / data.len().max(1) as f64
}

fn gradient(model: &LogRegModel, data: &Dataset, weights: &ClassWeights) -> Vec<f64> {
    let d = model.weights.len();
    let mut g = vec![0.0; d + 1];
    for (x, &l) in data.features.iter().zip(&data.labels) {
        let p = sigmoid(model.logit(x));
        let r = weights.weight(l) * (p - l as f64);
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    let n = data.len().max(1) as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

pub fn fit_logreg(data: &SplitDataset, weights: &ClassWeights, tcfg: &TrainConfig) -> Result<LogRegReport> {
    tcfg.validate()?;
    let d = data.width();
    let mut model = LogRegModel::zeros(d);
    let mut flat = vec![0.0; d + 1];
    let mut adam = Adam::new(d + 1, tcfg.learning_rate);
    let mut stopper = EarlyStopping::new(tcfg.patience);
    let mut best = model.clone();
    let mut losses = Vec::new();
    let mut stopped_early = false;
    for epoch in 1..=tcfg.max_epochs {
        let g = gradient(&model, &data.train, weights);
        adam.step(&mut flat, &g);
        model.weights.copy_from_slice(&flat[..d]);
        model.bias = flat[d];
        let val = mean_loss(&model, &data.validation, weights);
        if !val.is_finite() {
            return Err(Error::Numerical(format!("non-finite validation loss at epoch {epoch}")));
        }
        losses.push(val);
        if stopper.observe(epoch, val) {
            best = model.clone();
        }
        if stopper.should_stop() {
            stopped_early = epoch < tcfg.max_epochs;
            break;
        }
    }
    Ok(LogRegReport {
        model: best,
        best_epoch: stopper.best_epoch().expect("at least one epoch"),
        validation_losses: losses,
        stopped_early,
    })
}

pub fn evaluate_logreg(model: &LogRegModel, data: &Dataset) -> Result<(ConfusionCounts, Metrics)> {
    let preds = data
        .features
        .iter()
        .map(|x| predict_logreg(model, x).map(|(c, _)| c))
        .collect::<Result<Vec<_>>>()?;
    score(&preds, &data.labels)
}
