//! Incremental layer-count search: L = 1, 2, 3, … until the best validation
//! loss has not improved for N consecutive counts, N being the circuit width.

use serde::{Deserialize, Serialize};

use super::train::{train, TrainConfig, TrainReport};
use crate::data::SplitDataset;
use crate::error::{Error, Result};
use crate::model::MultiVqcConfig;

/// Hard ceiling on the layer count so a search always terminates.
pub const DEFAULT_MAX_LAYERS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoImprovement,
    MaxLayers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSearchReport {
    pub tried_layer_counts: Vec<usize>,
    pub validation_losses: Vec<f64>,
    pub chosen_layers: usize,
    pub stop_reason: StopReason,
    /// Training run at the chosen layer count.
    pub best_report: Option<TrainReport>,
}

/// Drives the search with an arbitrary evaluator returning the validation
/// loss for a layer count. Every count is retrained from scratch by the
/// evaluator.
pub fn search_layers<F, T>(
    patience: usize,
    max_layers: usize,
    mut evaluate: F,
) -> Result<(LayerSearchReport, Option<T>)>
where
    F: FnMut(usize) -> Result<(f64, T)>,
{
    if patience == 0 || max_layers == 0 {
        return Err(Error::Config("layer search needs patience and max_layers >= 1".into()));
    }
    let mut tried = Vec::new();
    let mut losses = Vec::new();
    let mut best: Option<(usize, f64, T)> = None;
    let mut stale = 0;
    let mut stop_reason = StopReason::MaxLayers;
    for layers in 1..=max_layers {
        let (loss, artifact) = evaluate(layers)?;
        tried.push(layers);
        losses.push(loss);
        match &best {
            // NaN never counts as an improvement.
            Some((_, b, _)) if loss.is_nan() || loss >= *b => stale += 1,
            _ => {
                best = Some((layers, loss, artifact));
                stale = 0;
            }
        }
        if stale >= patience {
            stop_reason = StopReason::NoImprovement;
            break;
        }
    }
    let (chosen_layers, _, artifact) = best.expect("at least one layer count evaluated");
    Ok((
        LayerSearchReport {
            tried_layer_counts: tried,
            validation_losses: losses,
            chosen_layers,
            stop_reason,
            best_report: None,
        },
        Some(artifact),
    ))
}

/// Searches a single layer count shared by every VQC in `base`.
pub fn select_layers(
    base: &MultiVqcConfig,
    data: &SplitDataset,
    tcfg: &TrainConfig,
    max_layers: usize,
) -> Result<LayerSearchReport> {
    let patience = base.input_width();
    let (mut report, best) = search_layers(patience, max_layers, |layers| {
        let config = base.clone().with_layers(layers);
        let run = train(&config, data, tcfg)?;
        Ok((run.best_validation_loss, run))
    })?;
    report.best_report = best;
    Ok(report)
}
