//! Principal component analysis by singular value decomposition of the
//! centered data.
//!
//! Wide inputs (`d > n`, e.g. a few hundred CNN embeddings with tens of
//! thousands of features) go through the `n × n` Gram matrix so the cost
//! stays `O(n²d)`. Everything else uses a thin SVD of the centered matrix.
//! Data is centered but never scaled.
//!
//! Components are sign-normalized so that the entry of largest magnitude is
//! positive; ties go to the lowest feature index.

use nalgebra::DMatrix;
use ndarray::{s, Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::io::FeatureMatrix;

/// Singular values below this fraction of the largest are treated as zero.
/// The Gram route squares the spectrum, so anything smaller is numerical noise.
const RELATIVE_RANK_TOL: f64 = 1e-7;

/// Fitted PCA transform.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Array1<f64>,
    components: Array2<f64>,
    explained_variance: Vec<f64>,
}

impl PcaModel {
    /// Per-feature training mean.
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    /// `p_max × d` matrix of orthonormal rows, highest variance first.
    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    /// Variance along each component, with `1/(n-1)` normalization.
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn p_max(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Projects raw rows onto the first `p` components.
    pub fn project(&self, x: &Array2<f64>, p: usize) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.ncols(),
                context: "feature columns vs. PCA model",
            });
        }
        if p == 0 || p > self.p_max() {
            return Err(Error::InvalidArgument(format!(
                "p = {p} outside 1..={}",
                self.p_max()
            )));
        }
        let centered = x - &self.mean;
        Ok(centered.dot(&self.components.slice(s![..p, ..]).t()))
    }

    /// Maps scores back to feature space using the first `p` components.
    pub fn reconstruct(&self, scores: &Array2<f64>) -> Array2<f64> {
        let p = scores.ncols();
        scores.dot(&self.components.slice(s![..p, ..])) + &self.mean
    }
}

/// Fits PCA with up to `p_max` components.
///
/// `p_max` above `min(n - 1, d)` is clamped (with a warning). Constant data
/// is not an error: the variances come out as zero and the components are an
/// arbitrary orthonormal set.
pub fn pca_fit(x: &FeatureMatrix, p_max: usize) -> Result<PcaModel> {
    let (n, d) = (x.n(), x.dim());
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "PCA needs at least 2 rows, got {n}"
        )));
    }
    if p_max == 0 {
        return Err(Error::InvalidArgument("p_max must be at least 1".into()));
    }
    let limit = (n - 1).min(d);
    let p_max = if p_max > limit {
        log::warn!("p_max = {p_max} exceeds min(n-1, d) = {limit}; clamping");
        limit
    } else {
        p_max
    };

    let values = x.values();
    let mean = values.mean_axis(Axis(0)).expect("n >= 2");
    let centered = values - &mean;
    let scale = values.iter().map(|v| v * v).sum::<f64>().sqrt();

    let (singular, mut components) = if d > n {
        gram_route(&centered, p_max)
    } else {
        svd_route(&centered, p_max)
    };

    let s_max = singular.first().copied().unwrap_or(0.0);
    let rank_floor = if s_max <= 1e-12 * scale {
        f64::INFINITY
    } else {
        s_max * RELATIVE_RANK_TOL
    };
    let determined: Vec<bool> = singular.iter().map(|&s| s > rank_floor).collect();
    orthonormalize(&mut components, &determined);
    for mut row in components.rows_mut() {
        let pivot = row
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, &v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            })
            .0;
        if row[pivot] < 0.0 {
            row.mapv_inplace(|v| -v);
        }
    }
    let explained_variance = singular
        .iter()
        .zip(&determined)
        .map(|(&s, &ok)| if ok { s * s / (n - 1) as f64 } else { 0.0 })
        .collect();

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

/// Convenience wrapper returning a [`FeatureMatrix`] that keeps the item ids.
pub fn pca_transform(model: &PcaModel, x: &FeatureMatrix, p: usize) -> Result<FeatureMatrix> {
    FeatureMatrix::new(x.ids().to_vec(), model.project(x.values(), p)?)
}

/// Top singular values and right singular vectors via `Xc Xcᵀ`.
fn gram_route(centered: &Array2<f64>, p_max: usize) -> (Vec<f64>, Array2<f64>) {
    let n = centered.nrows();
    let gram = centered.dot(&centered.t());
    let eig = to_nalgebra(&gram).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let singular: Vec<f64> = order[..p_max]
        .iter()
        .map(|&i| eig.eigenvalues[i].max(0.0).sqrt())
        .collect();
    let mut left = Array2::<f64>::zeros((p_max, n));
    for (r, &i) in order[..p_max].iter().enumerate() {
        let s = singular[r];
        if s > 0.0 {
            for j in 0..n {
                left[[r, j]] = eig.eigenvectors[(j, i)] / s;
            }
        }
    }
    (singular, left.dot(centered))
}

fn svd_route(centered: &Array2<f64>, p_max: usize) -> (Vec<f64>, Array2<f64>) {
    let d = centered.ncols();
    let svd = to_nalgebra(centered).svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular = order[..p_max]
        .iter()
        .map(|&i| svd.singular_values[i])
        .collect();
    let mut components = Array2::<f64>::zeros((p_max, d));
    for (r, &i) in order[..p_max].iter().enumerate() {
        for j in 0..d {
            components[[r, j]] = v_t[(i, j)];
        }
    }
    (singular, components)
}

fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Re-orthonormalizes determined rows in place (two Gram-Schmidt passes) and
/// fills undetermined rows with standard basis vectors projected off the rest.
fn orthonormalize(rows: &mut Array2<f64>, determined: &[bool]) {
    let (p, d) = rows.dim();
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(p);
    let mut slots = Vec::with_capacity(p);
    for r in 0..p {
        if determined[r] {
            let mut v = rows.row(r).to_owned();
            for _ in 0..2 {
                for b in &basis {
                    let proj = v.dot(b);
                    v.scaled_add(-proj, b);
                }
            }
            let norm = v.dot(&v).sqrt();
            v /= norm;
            basis.push(v);
            slots.push(r);
        }
    }
    let mut next_axis = 0;
    for r in 0..p {
        if determined[r] {
            continue;
        }
        loop {
            assert!(next_axis < d, "cannot complete an orthonormal basis");
            let mut v = Array1::<f64>::zeros(d);
            v[next_axis] = 1.0;
            next_axis += 1;
            for _ in 0..2 {
                for b in &basis {
                    let proj = v.dot(b);
                    v.scaled_add(-proj, b);
                }
            }
            let norm = v.dot(&v).sqrt();
            if norm > 0.5 {
                v /= norm;
                basis.push(v);
                slots.push(r);
                break;
            }
        }
    }
    for (v, r) in basis.into_iter().zip(slots) {
        rows.row_mut(r).assign(&v);
    }
}
