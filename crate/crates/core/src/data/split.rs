use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.6, 0.2, 0.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl SplitDataset {
    pub fn width(&self) -> usize {
        self.train.width()
    }

    pub fn parts(&self) -> [(&'static str, &Dataset); 3] {
        [
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
        ]
    }
}

/// Splits `total` into parts proportional to `weights` by largest remainder.
/// Ties in the remainder go to the earlier part.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Stratified, seeded train/validation/test split. Split sizes follow the
/// fractions of the whole dataset; each split's class counts follow the
/// dataset's class proportions. Rows keep their original relative order.
pub fn split(data: &Dataset, fractions: [f64; 3], seed: u64) -> Result<SplitDataset> {
    if fractions.iter().any(|&f| f.is_nan() || f <= 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions {fractions:?} must be positive and sum to 1"
        )));
    }
    let sizes = apportion(data.len(), &fractions);
    let [n_neg, n_pos] = data.class_counts();
    // Positives per split: apportion the positive count over the split sizes.
    let pos_per_split = apportion(n_pos, &sizes.iter().map(|&s| s as f64).collect::<Vec<_>>());
    let neg_per_split: Vec<usize> = sizes.iter().zip(&pos_per_split).map(|(s, p)| s - p).collect();
    debug_assert_eq!(neg_per_split.iter().sum::<usize>(), n_neg);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in data.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    by_class[0].shuffle(&mut rng);
    by_class[1].shuffle(&mut rng);

    let mut parts: [Vec<usize>; 3] = Default::default();
    for (class, per_split) in [(0, &neg_per_split), (1, &pos_per_split)] {
        let mut start = 0;
        for (part, &count) in parts.iter_mut().zip(per_split.iter()) {
            part.extend_from_slice(&by_class[class][start..start + count]);
            start += count;
        }
    }
    for (name, part) in ["train", "validation", "test"].iter().zip(parts.iter_mut()) {
        part.sort_unstable();
        let pos = part.iter().filter(|&&i| data.labels[i] == 1).count();
        if pos == 0 || pos == part.len() {
            return Err(Error::Data(format!(
                "{name} split of {} samples does not contain both classes",
                part.len()
            )));
        }
    }
    let [train, validation, test] = parts;
    Ok(SplitDataset {
        train: data.subset(&train),
        validation: data.subset(&validation),
        test: data.subset(&test),
        fractions,
        seed,
    })
}
