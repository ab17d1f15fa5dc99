//! Training loop, layer-count search and the hyperparameter sweep.

mod adam;
mod layers;
mod sweep;
mod train;

pub use adam::Adam;
pub use layers::{search_layers, select_layers, LayerSearchReport, StopReason, DEFAULT_MAX_LAYERS};
pub use sweep::{
    baseline_key, derive_seed, rank_rows, run_baseline, run_cell, sweep, CellResult, CellStatus,
    SweepCell, SweepGrid, SweepOptions, SweepRow, SweepTable, CSV_COLUMNS,
};
pub use train::{evaluate, train, EarlyStopping, EpochRecord, Evaluation, TrainConfig, TrainReport};
