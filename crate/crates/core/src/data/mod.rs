//! Dataset ingestion, preprocessing and splitting.

mod dataset;
mod pca;
mod pipeline;
mod scaling;
mod split;

pub use dataset::{load_csv, profile_warnings, read_csv, Dataset, DatasetSchema};
pub use pca::{covariance, fit_pca, symmetric_eigen, PcaModel};
pub use pipeline::{explained_variance_profile, prepare, FittedPipeline, PipelineFitter};
pub use scaling::{AngleRange, AngleScaler, MinMaxScaler};
pub use split::{split, SplitDataset, DEFAULT_FRACTIONS};
