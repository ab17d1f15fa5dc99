//! Chained variational quantum classifiers on an exact statevector simulator.
//!
//! Each VQC angle-encodes its inputs, applies Basic or Strongly Entangling
//! layers (optionally re-encoding before every layer) and is read out with
//! Pauli-Z. In a chain, every intermediate expectation becomes an input angle
//! of the next VQC; the last VQC reads one qubit per class.
//!
//! Training uses exact parameter-shift gradients, class-weighted
//! cross-entropy, Adam and early stopping. The [`data`] module covers CSV
//! loading, min-max scaling, PCA and stratified splitting.

pub mod data;
pub mod error;
pub mod gradients;
pub mod logreg;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod params;
pub mod quantum;
pub mod templates;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{MultiVqcConfig, MultiVqcModel, RescaleMode};
pub use params::ParamStore;
pub use templates::{AnsatzKind, EncodingKind, VqcConfig};
