//! Preprocessing chain: min-max scaling, then PCA, then angle normalisation.
//! Every statistic is fitted on the training split only.

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::pca::{fit_pca, PcaModel};
use super::scaling::{AngleRange, AngleScaler, MinMaxScaler};
use super::split::SplitDataset;
use crate::error::{Error, Result};

pub const PIPELINE_FORMAT: &str = "mvqc-pipeline";
pub const PIPELINE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stage {
    Empty,
    Scaled,
    Projected,
    Encoded,
}

/// Fits the preprocessing stages one at a time, refusing any other order.
#[derive(Debug, Clone)]
pub struct PipelineFitter {
    stage: Stage,
    current: Vec<Vec<f64>>,
    minmax: Option<MinMaxScaler>,
    pca: Option<PcaModel>,
    angles: Option<AngleScaler>,
}

impl Default for PipelineFitter {
    fn default() -> Self {
        Self::new()
    }
}

impl PipelineFitter {
    pub fn new() -> Self {
        PipelineFitter {
            stage: Stage::Empty,
            current: Vec::new(),
            minmax: None,
            pca: None,
            angles: None,
        }
    }

    fn expect(&self, stage: Stage, step: &str) -> Result<()> {
        if self.stage == stage {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "pipeline step '{step}' out of order (current stage {:?}); order is min-max, PCA, angle encoding",
                self.stage
            )))
        }
    }

    pub fn fit_minmax(&mut self, train: &[Vec<f64>]) -> Result<&mut Self> {
        self.expect(Stage::Empty, "min-max")?;
        let scaler = MinMaxScaler::fit(train)?;
        self.current = scaler.transform(train)?;
        self.minmax = Some(scaler);
        self.stage = Stage::Scaled;
        Ok(self)
    }

    pub fn fit_pca(&mut self, n_components: usize) -> Result<&mut Self> {
        self.expect(Stage::Scaled, "PCA")?;
        let pca = fit_pca(&self.current, n_components)?;
        self.current = pca.transform(&self.current)?;
        self.pca = Some(pca);
        self.stage = Stage::Projected;
        Ok(self)
    }

    pub fn fit_encoding(&mut self, range: AngleRange) -> Result<&mut Self> {
        self.expect(Stage::Projected, "angle encoding")?;
        let scaler = AngleScaler::fit(&self.current, range)?;
        self.current = scaler.transform(&self.current)?;
        self.angles = Some(scaler);
        self.stage = Stage::Encoded;
        Ok(self)
    }

    pub fn finish(&mut self) -> Result<FittedPipeline> {
        self.expect(Stage::Encoded, "finish")?;
        Ok(FittedPipeline {
            format: PIPELINE_FORMAT.into(),
            version: PIPELINE_FORMAT_VERSION,
            minmax: self.minmax.clone().expect("stage checked"),
            pca: self.pca.clone().expect("stage checked"),
            angles: self.angles.clone().expect("stage checked"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub format: String,
    pub version: u32,
    pub minmax: MinMaxScaler,
    pub pca: PcaModel,
    pub angles: AngleScaler,
}

impl FittedPipeline {
    pub fn fit(train: &[Vec<f64>], n_components: usize, range: AngleRange) -> Result<Self> {
        PipelineFitter::new()
            .fit_minmax(train)?
            .fit_pca(n_components)?
            .fit_encoding(range)?
            .finish()
    }

    pub fn n_components(&self) -> usize {
        self.pca.n_components()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let scaled = self.minmax.transform(rows)?;
        let projected = self.pca.transform(&scaled)?;
        self.angles.transform(&projected)
    }

    pub fn transform_dataset(&self, data: &Dataset) -> Result<Dataset> {
        let names = (0..self.n_components()).map(|k| format!("pc{}", k + 1)).collect();
        data.with_features(self.transform(&data.features)?, names)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: FittedPipeline = serde_json::from_str(text)?;
        if p.format != PIPELINE_FORMAT || p.version != PIPELINE_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported pipeline file {} v{}",
                p.format, p.version
            )));
        }
        Ok(p)
    }
}

/// Fits the pipeline on `split.train` and applies it to all three splits.
pub fn prepare(
    split: &SplitDataset,
    n_components: usize,
    range: AngleRange,
) -> Result<(SplitDataset, FittedPipeline)> {
    let pipeline = FittedPipeline::fit(&split.train.features, n_components, range)?;
    let prepared = SplitDataset {
        train: pipeline.transform_dataset(&split.train)?,
        validation: pipeline.transform_dataset(&split.validation)?,
        test: pipeline.transform_dataset(&split.test)?,
        fractions: split.fractions,
        seed: split.seed,
    };
    Ok((prepared, pipeline))
}

/// Per-component explained variance ratios of the whole dataset after min-max
/// scaling, all components kept.
pub fn explained_variance_profile(data: &Dataset) -> Result<Vec<f64>> {
    let scaler = MinMaxScaler::fit(&data.features)?;
    let scaled = scaler.transform(&data.features)?;
    Ok(fit_pca(&scaled, scaler.output_width())?.explained_variance_ratio)
}
