//! Principal component analysis by cyclic Jacobi eigendecomposition of the
//! sample covariance matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `K × D`, rows are orthonormal principal directions.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalue of each kept component.
    pub explained_variance: Vec<f64>,
    /// Eigenvalue over covariance trace.
    pub explained_variance_ratio: Vec<f64>,
}

const MAX_SWEEPS: usize = 100;

#[allow(clippy::needless_range_loop)]
/// Eigenpairs of a symmetric matrix, sorted by decreasing eigenvalue.
/// Eigenvectors are returned as rows.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Flips `vector` so that its largest-magnitude entry is positive.
fn orient(vector: &mut [f64]) {
    let pivot = vector
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &x)| {
            if x.abs() > bv {
                (i, x.abs())
            } else {
                (bi, bv)
            }
        })
        .0;
    if vector[pivot] < 0.0 {
        vector.iter_mut().for_each(|x| *x = -*x);
    }
}

#[allow(clippy::needless_range_loop)]
pub fn covariance(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; d];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![vec![0.0; d]; d];
    for row in rows {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (row[j] - mean[j]);
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }
    (mean, cov)
}

/// Fits `k` components on `train` (rows are samples).
pub fn fit_pca(train: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let d = train.first().map_or(0, Vec::len);
    if k == 0 || k > d {
        return Err(Error::Config(format!(
            "cannot keep {k} principal components of {d}-dimensional data"
        )));
    }
    if train.len() <= k {
        return Err(Error::Data(format!(
            "{} samples are not enough for {k} components",
            train.len()
        )));
    }
    if train.iter().any(|r| r.len() != d) {
        return Err(Error::Data("ragged feature matrix".into()));
    }
    let (mean, cov) = covariance(train);
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    let (values, mut vectors) = symmetric_eigen(&cov);
    vectors.truncate(k);
    vectors.iter_mut().for_each(|v| orient(v));
    let explained_variance: Vec<f64> = values.iter().take(k).map(|&v| v.max(0.0)).collect();
    let explained_variance_ratio = explained_variance
        .iter()
        .map(|&v| if trace > 0.0 { v / trace } else { 0.0 })
        .collect();
    Ok(PcaModel {
        mean,
        components: vectors,
        explained_variance,
        explained_variance_ratio,
    })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_width(&self) -> usize {
        self.mean.len()
    }

    /// `(x − mean) · componentsᵀ` for every row.
    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let d = self.mean.len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::Data(format!(
                "PCA fitted on {d} columns applied to a row of {}",
                r.len()
            )));
        }
        Ok(rows
            .iter()
            .map(|row| {
                self.components
                    .iter()
                    .map(|c| {
                        c.iter()
                            .zip(row.iter().zip(&self.mean))
                            .map(|(w, (x, m))| w * (x - m))
                            .sum()
                    })
                    .collect()
            })
            .collect())
    }

    /// Maps projected rows back to the input space.
    pub fn inverse_transform(&self, projected: &[Vec<f64>]) -> Vec<Vec<f64>> {
        projected
            .iter()
            .map(|z| {
                let mut x = self.mean.clone();
                for (zk, c) in z.iter().zip(&self.components) {
                    for (xi, ci) in x.iter_mut().zip(c) {
                        *xi += zk * ci;
                    }
                }
                x
            })
            .collect()
    }

    pub fn cumulative_ratio(&self) -> Vec<f64> {
        self.explained_variance_ratio
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }
}
