//! Seeded synthetic datasets for exercising the pipeline without images.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::io::{FeatureMatrix, LabeledDataset};

fn class_names(prefix: &str, count: usize) -> Vec<String> {
    let width = (count - 1).to_string().len();
    (0..count).map(|c| format!("{prefix}{c:0width$}")).collect()
}

fn item_ids(prefix: &str, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Vertices of a regular simplex with unit edge length, one per row, in
/// `count - 1` dimensions.
fn simplex_vertices(count: usize) -> Array2<f64> {
    // coordinates of e_i in the orthonormal (Helmert) basis of {x : sum x = 0}
    let mut v = Array2::<f64>::zeros((count, count - 1));
    for axis in 0..count - 1 {
        let m = (axis + 1) as f64;
        let norm = (m * (m + 1.0)).sqrt();
        for vertex in 0..=axis {
            v[[vertex, axis]] = 1.0 / norm;
        }
        v[[axis + 1, axis]] = -m / norm;
    }
    v / std::f64::consts::SQRT_2
}

/// `classes` isotropic Gaussian clusters of balanced size, centers on a
/// regular simplex with edge `separation * sigma`. Items are grouped by class.
pub fn gen_blobs(
    n: usize,
    classes: usize,
    dim: usize,
    separation: f64,
    sigma: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if classes < 2 || n < classes {
        return Err(Error::InvalidArgument(format!(
            "blobs need n >= classes >= 2 (n = {n}, classes = {classes})"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dim must be at least 1".into()));
    }
    if dim < classes - 1 {
        return Err(Error::InvalidArgument(format!(
            "{classes} equidistant centers need at least {} dimensions, got {dim}",
            classes - 1
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) || !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma = {sigma} must be positive and separation = {separation} non-negative"
        )));
    }

    let centers = simplex_vertices(classes) * (separation * sigma);
    let noise = Normal::new(0.0, sigma).expect("sigma validated");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::<f64>::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for class in 0..classes {
        let size = n / classes + usize::from(class < n % classes);
        for _ in 0..size {
            for j in 0..dim {
                let center = if j < classes - 1 {
                    centers[[class, j]]
                } else {
                    0.0
                };
                values[[row, j]] = center + noise.sample(&mut rng);
            }
            labels.push(Some(class));
            row += 1;
        }
    }
    LabeledDataset::new(
        FeatureMatrix::new(item_ids("b", n), values)?,
        labels,
        class_names("c", classes),
    )
}

/// Two interleaved unit half-circles with isotropic Gaussian noise.
pub fn gen_moons(n: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "moons need n >= 4, got {n}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise = {noise} must be >= 0"
        )));
    }
    let outer = n / 2;
    let inner = n - outer;
    let angle = |i: usize, count: usize| std::f64::consts::PI * i as f64 / (count - 1) as f64;

    let mut values = Array2::<f64>::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..outer {
        let t = angle(i, outer);
        values[[i, 0]] = t.cos();
        values[[i, 1]] = t.sin();
        labels.push(Some(0));
    }
    for i in 0..inner {
        let t = angle(i, inner);
        values[[outer + i, 0]] = 1.0 - t.cos();
        values[[outer + i, 1]] = 0.5 - t.sin();
        labels.push(Some(1));
    }
    if noise > 0.0 {
        let jitter = Normal::new(0.0, noise).expect("noise validated");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        values.mapv_inplace(|v| v + jitter.sample(&mut rng));
    }
    LabeledDataset::new(
        FeatureMatrix::new(item_ids("m", n), values)?,
        labels,
        class_names("moon", 2),
    )
}
