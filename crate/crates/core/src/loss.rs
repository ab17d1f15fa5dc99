//! Class weighting and the weighted cross-entropy over softmax scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelOutput;

/// Probabilities are floored here before the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Each class is weighted by the prevalence of the other class, so both
/// classes carry the same total mass `count_0 * count_1 / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub weight_class0: f64,
    pub weight_class1: f64,
    /// Label counts the weights were derived from; `[0, 0]` for hand-set weights.
    #[serde(default)]
    pub counts: [usize; 2],
}

impl ClassWeights {
    pub fn new(weight_class0: f64, weight_class1: f64) -> Self {
        ClassWeights {
            weight_class0,
            weight_class1,
            counts: [0, 0],
        }
    }

    pub fn uniform() -> Self {
        Self::new(1.0, 1.0)
    }

    pub fn weight(&self, class: usize) -> f64 {
        if class == 0 {
            self.weight_class0
        } else {
            self.weight_class1
        }
    }

    /// Total weighted mass of `class` as an exact fraction `(numerator, N)`.
    pub fn class_mass(&self, class: usize) -> (u128, u128) {
        let [c0, c1] = self.counts.map(|c| c as u128);
        let n = c0 + c1;
        match class {
            0 => (c0 * c1, n),
            _ => (c1 * c0, n),
        }
    }
}

pub fn compute_class_weights(labels: &[usize]) -> Result<ClassWeights> {
    let mut counts = [0usize; 2];
    for &l in labels {
        match l {
            0 | 1 => counts[l] += 1,
            other => return Err(Error::Data(format!("label {other} is not binary"))),
        }
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::Data(format!(
            "class weighting needs both classes present (counts {counts:?})"
        )));
    }
    let n = labels.len() as f64;
    Ok(ClassWeights {
        weight_class0: counts[1] as f64 / n,
        weight_class1: counts[0] as f64 / n,
        counts,
    })
}

/// `−w(label) · ln(max(p_label, 1e-12))`.
pub fn weighted_loss(output: &ModelOutput, label: usize, weights: &ClassWeights) -> f64 {
    let p = output.probabilities[label].max(PROB_FLOOR);
    -weights.weight(label) * p.ln()
}

/// Gradient of [`weighted_loss`] with respect to the pre-softmax class scores.
/// Zero when the probability sits on the floor.
pub fn loss_score_gradient(output: &ModelOutput, label: usize, weights: &ClassWeights) -> Vec<f64> {
    if output.probabilities[label] < PROB_FLOOR {
        return vec![0.0; output.probabilities.len()];
    }
    let w = weights.weight(label);
    output
        .probabilities
        .iter()
        .enumerate()
        .map(|(j, &p)| w * (p - if j == label { 1.0 } else { 0.0 }))
        .collect()
}
