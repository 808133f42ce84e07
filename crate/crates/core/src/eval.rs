//! Evaluation protocol: stratified labeled subsets, repeated trials, and a
//! grid search over (principal components, neighbors).
//!
//! Accuracy is measured on the nodes that were *not* given a label. Counting
//! the seeds would inflate every score by the labeled fraction.

use std::ops::RangeInclusive;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, Graph};
use crate::io::LabeledDataset;
use crate::pca::{pca_fit, pca_transform, PcaModel};
use crate::pcc::{pcc_run, PccConfig, Prediction};

/// Mixes `parts` into `base` with the splitmix64 finalizer.
///
/// The mapping is fixed, so seeds derived from the same inputs agree across
/// platforms, thread counts and releases.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(base), |h, &x| mix(h ^ mix(x)))
}

/// Picks `floor(fraction * size)` members of every class (at least one)
/// uniformly at random. Returns `true` for nodes that keep their label.
pub fn sample_labeled_mask(
    labels: &[usize],
    num_classes: usize,
    fraction: f64,
    seed: u64,
) -> Result<Vec<bool>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "labeled fraction {fraction} outside (0, 1]"
        )));
    }
    let mut members = vec![Vec::new(); num_classes];
    for (i, &c) in labels.iter().enumerate() {
        let slot = members.get_mut(c).ok_or_else(|| {
            Error::InvalidLabels(format!("class {c} out of range for {num_classes} classes"))
        })?;
        slot.push(i);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::InvalidLabels(format!(
            "class {empty} has no members"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; labels.len()];
    for class in &members {
        // the epsilon keeps products like 0.29 * 100 from flooring to 28
        let take = ((fraction * class.len() as f64 + 1e-9).floor() as usize).clamp(1, class.len());
        for idx in rand::seq::index::sample(&mut rng, class.len(), take) {
            mask[class[idx]] = true;
        }
    }
    Ok(mask)
}

/// Fraction of correctly predicted nodes among those with `mask == false`.
pub fn accuracy(prediction: &Prediction, truth: &[usize], mask: &[bool]) -> Result<f64> {
    if prediction.len() != truth.len() || mask.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: if prediction.len() != truth.len() {
                prediction.len()
            } else {
                mask.len()
            },
            context: "prediction/mask length vs. ground truth",
        });
    }
    let (mut correct, mut total) = (0usize, 0usize);
    for ((&pred, &want), &labeled) in prediction.labels.iter().zip(truth).zip(mask) {
        if !labeled {
            total += 1;
            correct += usize::from(pred == want);
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument(
            "accuracy is undefined without unlabeled nodes".into(),
        ));
    }
    Ok(correct as f64 / total as f64)
}

/// One trial on a prebuilt graph. The mask and the particle RNG get separate
/// streams derived from `trial_seed`.
pub fn evaluate_on_graph(
    graph: &Graph,
    truth: &[usize],
    num_classes: usize,
    fraction: f64,
    trial_seed: u64,
    config: &PccConfig,
) -> Result<f64> {
    let mask = sample_labeled_mask(truth, num_classes, fraction, derive_seed(trial_seed, &[0]))?;
    if mask.iter().all(|&m| m) {
        return Err(Error::InvalidArgument(
            "accuracy is undefined without unlabeled nodes".into(),
        ));
    }
    let labels: Vec<Option<usize>> = truth
        .iter()
        .zip(&mask)
        .map(|(&c, &m)| m.then_some(c))
        .collect();
    let config = PccConfig {
        seed: derive_seed(trial_seed, &[1]),
        ..config.clone()
    };
    let prediction = pcc_run(graph, &labels, num_classes, &config)?;
    accuracy(&prediction, truth, &mask)
}

/// PCA projection, k-NN graph, stratified mask, particle run, accuracy.
pub fn evaluate_once(
    dataset: &LabeledDataset,
    model: &PcaModel,
    p: usize,
    k: usize,
    fraction: f64,
    trial_seed: u64,
    config: &PccConfig,
) -> Result<f64> {
    let truth = dataset.truth()?;
    let z = pca_transform(model, &dataset.features, p)?;
    let graph = build_knn_graph(&z, k)?;
    evaluate_on_graph(
        &graph,
        &truth,
        dataset.num_classes(),
        fraction,
        trial_seed,
        config,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub labeled_fraction: f64,
    pub repetitions: usize,
    pub p_range: RangeInclusive<usize>,
    pub k_range: RangeInclusive<usize>,
    pub base_seed: u64,
}

impl TrialSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "labeled fraction {} outside (0, 1]",
                self.labeled_fraction
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument(
                "repetitions must be at least 1".into(),
            ));
        }
        if self.p_range.is_empty() || *self.p_range.start() == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad p range {:?}",
                self.p_range
            )));
        }
        if self.k_range.is_empty() || *self.k_range.start() == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad k range {:?}",
                self.k_range
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellStats {
    pub mean: f64,
    /// Sample standard deviation (zero for a single repetition).
    pub stddev: f64,
    pub repetitions: usize,
}

impl CellStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stddev = if n > 1 {
            let ss: f64 = samples.iter().map(|a| (a - mean) * (a - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stddev,
            repetitions: n,
        }
    }
}

/// Per-cell statistics, rows indexed by p and columns by k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub p_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub cells: Vec<Vec<CellStats>>,
    /// `(p_index, k_index)` of the highest mean; ties go to smaller p, then smaller k.
    pub best: (usize, usize),
}

impl GridResult {
    pub fn from_cells(
        p_values: Vec<usize>,
        k_values: Vec<usize>,
        cells: Vec<Vec<CellStats>>,
    ) -> Self {
        let mut best = (0, 0);
        let mut best_mean = f64::NEG_INFINITY;
        for (pi, row) in cells.iter().enumerate() {
            for (ki, cell) in row.iter().enumerate() {
                if cell.mean > best_mean {
                    best_mean = cell.mean;
                    best = (pi, ki);
                }
            }
        }
        Self {
            p_values,
            k_values,
            cells,
            best,
        }
    }

    pub fn cell(&self, p: usize, k: usize) -> Option<&CellStats> {
        let pi = self.p_values.iter().position(|&v| v == p)?;
        let ki = self.k_values.iter().position(|&v| v == k)?;
        self.cells.get(pi)?.get(ki)
    }

    /// `(p, k, stats)` of the best cell.
    pub fn best_cell(&self) -> (usize, usize, &CellStats) {
        let (pi, ki) = self.best;
        (self.p_values[pi], self.k_values[ki], &self.cells[pi][ki])
    }

    /// One-line report: labeled share, extractor tag, best p and k, mean and spread.
    pub fn summary_line(&self, labeled_fraction: f64, tag: &str) -> String {
        let (p, k, cell) = self.best_cell();
        format!(
            "labeled={:.0}% extractor={tag} p={p} k={k} accuracy={:.2}% stddev={:.2}%",
            labeled_fraction * 100.0,
            cell.mean * 100.0,
            cell.stddev * 100.0
        )
    }
}

/// Fits PCA once, then evaluates every (p, k) cell `repetitions` times.
///
/// Trial `r` of cell `(p, k)` uses seed `derive_seed(base_seed, [p, k, r])`,
/// so results do not depend on scheduling or thread count.
pub fn grid_search(
    dataset: &LabeledDataset,
    spec: &TrialSpec,
    config: &PccConfig,
) -> Result<GridResult> {
    spec.validate()?;
    config.validate()?;
    let truth = dataset.truth()?;
    let num_classes = dataset.num_classes();
    let p_values: Vec<usize> = spec.p_range.clone().collect();
    let k_values: Vec<usize> = spec.k_range.clone().collect();
    let p_max = *spec.p_range.end();

    let model = pca_fit(&dataset.features, p_max)?;
    if model.p_max() < p_max {
        return Err(Error::InvalidArgument(format!(
            "p range reaches {p_max} but the data supports at most {} components",
            model.p_max()
        )));
    }
    if *spec.k_range.end() >= dataset.n() {
        return Err(Error::InvalidArgument(format!(
            "k range reaches {} but there are only {} items",
            spec.k_range.end(),
            dataset.n()
        )));
    }

    let cells: Vec<(usize, usize)> = p_values
        .iter()
        .flat_map(|&p| k_values.iter().map(move |&k| (p, k)))
        .collect();
    let graphs: Vec<Graph> = p_values
        .par_iter()
        .map(|&p| {
            let z = pca_transform(&model, &dataset.features, p)?;
            k_values
                .iter()
                .map(|&k| build_knn_graph(&z, k))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let reps = spec.repetitions;
    let accuracies: Vec<f64> = (0..cells.len() * reps)
        .into_par_iter()
        .map(|task| {
            let (cell, rep) = (task / reps, task % reps);
            let (p, k) = cells[cell];
            let seed = derive_seed(spec.base_seed, &[p as u64, k as u64, rep as u64]);
            evaluate_on_graph(
                &graphs[cell],
                &truth,
                num_classes,
                spec.labeled_fraction,
                seed,
                config,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let stats: Vec<CellStats> = accuracies
        .chunks(reps)
        .map(CellStats::from_samples)
        .collect();
    let rows = stats
        .chunks(k_values.len())
        .map(<[CellStats]>::to_vec)
        .collect();
    Ok(GridResult::from_cells(p_values, k_values, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_fraction_labels_everything() {
        let labels = [0, 1, 1, 0, 1];
        let mask = sample_labeled_mask(&labels, 2, 1.0, 9).unwrap();
        assert!(mask.iter().all(|&m| m));
    }

    #[test]
    fn stratified_counts() {
        let labels: Vec<usize> = (0..342).map(|i| usize::from(i >= 175)).collect();
        for seed in 0..20 {
            let mask = sample_labeled_mask(&labels, 2, 0.1, seed).unwrap();
            let first = mask[..175].iter().filter(|&&m| m).count();
            let second = mask[175..].iter().filter(|&&m| m).count();
            assert_eq!((first, second), (17, 16));
        }
        let tiny = [0, 0, 0, 1, 1, 1];
        let mask = sample_labeled_mask(&tiny, 2, 0.01, 4).unwrap();
        assert_eq!(mask.iter().filter(|&&m| m).count(), 2);
        assert!(mask[..3].iter().any(|&m| m) && mask[3..].iter().any(|&m| m));
    }

    #[test]
    fn mask_rejects_empty_class_and_bad_fraction() {
        assert!(sample_labeled_mask(&[0, 0, 2], 3, 0.5, 1).is_err());
        assert!(sample_labeled_mask(&[0, 1], 2, 0.0, 1).is_err());
        assert!(sample_labeled_mask(&[0, 1], 2, 1.5, 1).is_err());
    }

    #[test]
    fn mask_is_seeded() {
        let labels: Vec<usize> = (0..100).map(|i| i % 3).collect();
        let a = sample_labeled_mask(&labels, 3, 0.2, 77).unwrap();
        let b = sample_labeled_mask(&labels, 3, 0.2, 77).unwrap();
        let c = sample_labeled_mask(&labels, 3, 0.2, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    fn prediction(labels: Vec<usize>) -> Prediction {
        let dom = labels
            .iter()
            .flat_map(|&c| if c == 0 { [1.0, 0.0] } else { [0.0, 1.0] })
            .collect();
        Prediction::new(labels, dom, 2, 0, true)
    }

    #[test]
    fn accuracy_counts_unlabeled_only() {
        let truth = vec![0, 1, 0, 1];
        let pred = prediction(vec![1, 1, 0, 1]);
        assert_eq!(
            accuracy(&pred, &truth, &[true, false, false, false]).unwrap(),
            1.0
        );

        let truth = vec![0; 342];
        let mut labels = vec![0; 342];
        let mut mask = vec![false; 342];
        mask[..34].fill(true);
        labels[340] = 1;
        labels[341] = 1;
        let acc = accuracy(&prediction(labels), &truth, &mask).unwrap();
        assert_eq!(acc, 306.0 / 308.0);
        assert!((acc - 0.993_506_493_5).abs() < 1e-9);

        let mut labels = vec![0; 342];
        labels[34..188].fill(1);
        assert_eq!(accuracy(&prediction(labels), &truth, &mask).unwrap(), 0.5);
    }

    #[test]
    fn accuracy_errors() {
        let pred = prediction(vec![0, 1]);
        assert!(accuracy(&pred, &[0, 1], &[true, true]).is_err());
        assert!(accuracy(&pred, &[0, 1, 1], &[false, false, false]).is_err());
    }

    #[test]
    fn cell_stats() {
        let s = CellStats::from_samples(&[0.5, 0.7, 0.9]);
        assert!((s.mean - 0.7).abs() < 1e-12);
        assert!((s.stddev - 0.2).abs() < 1e-12);
        assert_eq!(CellStats::from_samples(&[0.4]).stddev, 0.0);
    }

    #[test]
    fn argmax_ties_prefer_small_p_then_k() {
        let c = |mean| CellStats {
            mean,
            stddev: 0.0,
            repetitions: 1,
        };
        let grid = GridResult::from_cells(
            vec![1, 2],
            vec![1, 2],
            vec![vec![c(0.5), c(0.8)], vec![c(0.8), c(0.8)]],
        );
        assert_eq!(grid.best, (0, 1));
        assert_eq!(grid.best_cell().0, 1);
        assert_eq!(grid.best_cell().1, 2);
        assert!(grid
            .summary_line(0.2, "vgg16")
            .starts_with("labeled=20% extractor=vgg16 p=1 k=2"));
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
    }
}
