//! Labeled tabular data and CSV ingestion driven by per-dataset schemas.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    /// Row-major `N × D` feature matrix.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            features,
            labels,
            feature_names,
        };
        ds.check()?;
        Ok(ds)
    }

    fn check(&self) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::Data(format!(
                "{}: {} feature rows but {} labels",
                self.name,
                self.features.len(),
                self.labels.len()
            )));
        }
        let width = self.feature_names.len();
        if let Some((i, row)) = self
            .features
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != width)
        {
            return Err(Error::Data(format!(
                "{}: row {i} has {} values, expected {width}",
                self.name,
                row.len()
            )));
        }
        if let Some(l) = self.labels.iter().find(|&&l| l > 1) {
            return Err(Error::Data(format!("{}: label {l} is not binary", self.name)));
        }
        if self.features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("{}: non-finite feature value", self.name)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn count_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.count_positive();
        [self.len() - pos, pos]
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn with_features(&self, features: Vec<Vec<f64>>, feature_names: Vec<String>) -> Result<Dataset> {
        Dataset::new(self.name.clone(), features, self.labels.clone(), feature_names)
    }
}

/// Describes how a CSV file maps onto a [`Dataset`] and the profile it is
/// expected to match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    pub label_column: String,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Raw label text → class. When empty the label must be numeric 0/1.
    #[serde(default)]
    pub label_map: BTreeMap<String, usize>,
    #[serde(default)]
    pub expected_rows: Option<usize>,
    #[serde(default)]
    pub expected_features: Option<usize>,
    #[serde(default)]
    pub expected_positive_fraction: Option<f64>,
}

impl DatasetSchema {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn parse_label(&self, raw: &str) -> std::result::Result<usize, String> {
        let raw = raw.trim();
        if !self.label_map.is_empty() {
            return self
                .label_map
                .get(raw)
                .copied()
                .ok_or_else(|| format!("label '{raw}' not in label map"));
        }
        match raw.parse::<f64>() {
            Ok(0.0) => Ok(0),
            Ok(1.0) => Ok(1),
            _ => Err(format!("label '{raw}' is not 0 or 1")),
        }
    }
}

/// Reads a comma-separated file with a header row. Profile mismatches are
/// logged as warnings, not errors, since the public datasets circulate in
/// several variants.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    read_csv(file, path, schema)
}

/// Like [`load_csv`] but reads from any source; `path` only labels errors.
pub fn read_csv<R: std::io::Read>(source: R, path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == schema.label_column)
        .ok_or_else(|| Error::Parse {
            path: path.into(),
            row: 1,
            message: format!("header has no label column '{}'", schema.label_column),
        })?;
    for dropped in &schema.drop_columns {
        if !headers.iter().any(|h| h == dropped) {
            warn!("{}: drop column '{dropped}' not present", path.display());
        }
    }
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && !schema.drop_columns.iter().any(|d| d == &headers[i]))
        .collect();
    let feature_names = feature_cols.iter().map(|&i| headers[i].to_string()).collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        // Header is line 1.
        let row = r + 2;
        let record = record.map_err(|e| Error::Parse {
            path: path.into(),
            row,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                path: path.into(),
                row,
                message: format!("{} fields, header has {}", record.len(), headers.len()),
            });
        }
        let label = schema
            .parse_label(&record[label_idx])
            .map_err(|message| Error::Parse {
                path: path.into(),
                row,
                message,
            })?;
        let values = feature_cols
            .iter()
            .map(|&c| {
                let raw = &record[c];
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        path: path.into(),
                        row,
                        message: format!("column '{}': cannot parse '{raw}' as a number", &headers[c]),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        features.push(values);
        labels.push(label);
    }
    let ds = Dataset::new(schema.name.clone(), features, labels, feature_names)?;
    for w in profile_warnings(&ds, schema) {
        warn!("{}: {w}", path.display());
    }
    Ok(ds)
}

/// Differences between a loaded dataset and the schema's expected profile.
pub fn profile_warnings(ds: &Dataset, schema: &DatasetSchema) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(rows) = schema.expected_rows.filter(|&r| r != ds.len()) {
        out.push(format!("expected {rows} rows, found {}", ds.len()));
    }
    if let Some(cols) = schema.expected_features.filter(|&c| c != ds.width()) {
        out.push(format!("expected {cols} features, found {}", ds.width()));
    }
    if let Some(frac) = schema.expected_positive_fraction {
        let actual = ds.count_positive() as f64 / ds.len().max(1) as f64;
        if (actual - frac).abs() > 0.01 {
            out.push(format!(
                "expected {:.1}% positives, found {:.1}%",
                100.0 * frac,
                100.0 * actual
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn schema() -> DatasetSchema {
        DatasetSchema {
            name: "toy".into(),
            label_column: "diagnosis".into(),
            drop_columns: vec!["id".into()],
            label_map: [("M".to_string(), 1), ("B".to_string(), 0)].into_iter().collect(),
            expected_rows: Some(3),
            expected_features: Some(2),
            expected_positive_fraction: None,
        }
    }

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn maps_labels_and_drops_id() {
        let f = write("id,diagnosis,a,b\n1,M,1.5,2\n2,B,0,3\n3, M ,4,5\n");
        let ds = load_csv(f.path(), &schema()).unwrap();
        assert_eq!(ds.labels, vec![1, 0, 1]);
        assert_eq!(ds.feature_names, vec!["a", "b"]);
        assert_eq!(ds.features[0], vec![1.5, 2.0]);
        assert!(profile_warnings(&ds, &schema()).is_empty());
    }

    #[test]
    fn parse_failure_names_the_row() {
        let f = write("id,diagnosis,a,b\n1,M,1.5,2\n2,B,,3\n");
        match load_csv(f.path(), &schema()) {
            Err(Error::Parse { row, message, .. }) => {
                assert_eq!(row, 3);
                assert!(message.contains("'a'"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = write("id,diagnosis,a,b\n1,X,1.5,2\n");
        assert!(matches!(load_csv(f.path(), &schema()), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn profile_mismatch_is_a_warning() {
        let f = write("id,diagnosis,a,b\n1,M,1.5,2\n");
        let ds = load_csv(f.path(), &schema()).unwrap();
        let w = profile_warnings(&ds, &schema());
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("3 rows"));
    }

    #[test]
    fn numeric_labels() {
        let mut s = schema();
        s.label_map.clear();
        s.label_column = "y".into();
        s.drop_columns.clear();
        let f = write("x,y\n0.5,1\n0.25,0.0\n");
        let ds = load_csv(f.path(), &s).unwrap();
        assert_eq!(ds.labels, vec![1, 0]);
        let f = write("x,y\n0.5,2\n");
        assert!(load_csv(f.path(), &s).is_err());
    }

    #[test]
    fn missing_label_column() {
        let f = write("id,a,b\n1,1,2\n");
        assert!(matches!(load_csv(f.path(), &schema()), Err(Error::Parse { row: 1, .. })));
    }
}
