use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Precision, recall and F1. A ratio whose denominator is zero is reported as
/// 0 and flagged as undefined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default)]
    pub precision_undefined: bool,
    #[serde(default)]
    pub recall_undefined: bool,
    #[serde(default)]
    pub f1_undefined: bool,
}

pub fn confusion(
    predictions: &[usize],
    labels: &[usize],
    positive_class: usize,
) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Data("no samples to score".into()));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p == positive_class, l == positive_class) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn compute_metrics(c: &ConfusionCounts) -> Metrics {
    let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
    let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
    let (f1, f1_undefined) = if precision + recall == 0.0 {
        (0.0, true)
    } else {
        (2.0 * precision * recall / (precision + recall), false)
    };
    Metrics {
        precision,
        recall,
        f1,
        precision_undefined,
        recall_undefined,
        f1_undefined,
    }
}

/// Confusion counts and metrics with class 1 as the positive class.
pub fn evaluate(predictions: &[usize], labels: &[usize]) -> Result<(ConfusionCounts, Metrics)> {
    let c = confusion(predictions, labels, 1)?;
    Ok((c, compute_metrics(&c)))
}
