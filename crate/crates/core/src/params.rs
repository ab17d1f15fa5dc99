use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat trainable-parameter vector for a chain of VQCs. VQC `i` owns the
/// contiguous block `offsets[i]..offsets[i + 1]`, indexed by its local
/// parameter ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    values: Vec<f64>,
    offsets: Vec<usize>,
}

impl ParamStore {
    pub fn zeros(counts: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        ParamStore {
            values: vec![0.0; *offsets.last().unwrap()],
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_vqcs(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn vqc(&self, index: usize) -> &[f64] {
        &self.values[self.offsets[index]..self.offsets[index + 1]]
    }

    /// Flat index of local parameter `param_id` of VQC `vqc`.
    pub fn flat_index(&self, vqc: usize, param_id: usize) -> Result<usize> {
        let start = *self
            .offsets
            .get(vqc)
            .filter(|_| vqc + 1 < self.offsets.len())
            .ok_or_else(|| Error::ModelDefinition(format!("no VQC {vqc} in parameter store")))?;
        let idx = start + param_id;
        if idx >= self.offsets[vqc + 1] {
            return Err(Error::ModelDefinition(format!(
                "VQC {vqc} has no parameter {param_id}"
            )));
        }
        Ok(idx)
    }

    /// Inverse of [`ParamStore::flat_index`].
    pub fn locate(&self, flat: usize) -> Option<(usize, usize)> {
        if flat >= self.values.len() {
            return None;
        }
        let vqc = self.offsets.partition_point(|&o| o <= flat) - 1;
        Some((vqc, flat - self.offsets[vqc]))
    }

    /// Independent uniform draws in `[0, scale)`.
    pub fn randomize<R: Rng + ?Sized>(&mut self, rng: &mut R, scale: f64) {
        for v in &mut self.values {
            *v = rng.gen::<f64>() * scale;
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
