//! Affine per-column scalers fitted on the training split.

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn column_bounds(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let width = rows
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Data("cannot fit a scaler on zero rows".into()))?;
    let mut min = vec![f64::INFINITY; width];
    let mut max = vec![f64::NEG_INFINITY; width];
    for row in rows {
        if row.len() != width {
            return Err(Error::Data(format!(
                "ragged matrix: row of {} values, expected {width}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok((min, max))
}

fn check_width(rows: &[Vec<f64>], width: usize) -> Result<()> {
    match rows.iter().find(|r| r.len() != width) {
        Some(r) => Err(Error::Data(format!(
            "scaler fitted on {width} columns applied to a row of {}",
            r.len()
        ))),
        None => Ok(()),
    }
}

/// Maps every kept column onto `[0, 1]`; constant training columns are
/// dropped. Values outside the training range are clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Input column indices that survive (non-constant on the training split).
    pub kept: Vec<usize>,
    pub input_width: usize,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let (min, max) = column_bounds(rows)?;
        let kept: Vec<usize> = (0..min.len()).filter(|&j| max[j] > min[j]).collect();
        for j in (0..min.len()).filter(|j| !kept.contains(j)) {
            warn!("column {j} is constant on the training split; dropped");
        }
        if kept.is_empty() {
            return Err(Error::Data("every column is constant".into()));
        }
        Ok(MinMaxScaler {
            input_width: min.len(),
            min: kept.iter().map(|&j| min[j]).collect(),
            max: kept.iter().map(|&j| max[j]).collect(),
            kept,
        })
    }

    pub fn output_width(&self) -> usize {
        self.kept.len()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        check_width(rows, self.input_width)?;
        Ok(rows
            .iter()
            .map(|row| {
                self.kept
                    .iter()
                    .enumerate()
                    .map(|(k, &j)| ((row[j] - self.min[k]) / (self.max[k] - self.min[k])).clamp(0.0, 1.0))
                    .collect()
            })
            .collect())
    }
}

/// Target interval of the angle normalisation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleRange {
    #[default]
    ZeroPi,
    ZeroTwoPi,
    SymmetricPi,
}

impl AngleRange {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            AngleRange::ZeroPi => (0.0, PI),
            AngleRange::ZeroTwoPi => (0.0, 2.0 * PI),
            AngleRange::SymmetricPi => (-PI, PI),
        }
    }
}

/// Maps each column affinely onto the angle range. A column that is constant
/// on the training split maps to the midpoint of the range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub range: AngleRange,
}

impl AngleScaler {
    pub fn fit(rows: &[Vec<f64>], range: AngleRange) -> Result<Self> {
        let (min, max) = column_bounds(rows)?;
        Ok(AngleScaler { min, max, range })
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        check_width(rows, self.min.len())?;
        let (lo, hi) = self.range.bounds();
        Ok(rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let span = self.max[j] - self.min[j];
                        if span > 0.0 {
                            (lo + (v - self.min[j]) / span * (hi - lo)).clamp(lo, hi)
                        } else {
                            0.5 * (lo + hi)
                        }
                    })
                    .collect()
            })
            .collect())
    }
}
