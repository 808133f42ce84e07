//! PCA on data with more dimensions than rows: explained variance and
//! reconstruction error as components are added.

use ndarray::Array2;
use pcc::{pca_fit, FeatureMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> pcc::Result<()> {
    // 40 rows in 100 dimensions, built from 3 latent factors plus small noise
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let loadings = Array2::from_shape_fn((3, 100), |_| rng.random_range(-1.0..1.0));
    let factors = Array2::from_shape_fn((40, 3), |(_, f)| {
        rng.random_range(-1.0..1.0) * [5.0, 2.0, 1.0][f]
    });
    let noise = Array2::from_shape_fn((40, 100), |_| rng.random_range(-0.01..0.01));
    let x = factors.dot(&loadings) + noise;
    let data = FeatureMatrix::from_values(x.clone())?;

    let model = pca_fit(&data, 6)?;
    let total: f64 = model.explained_variance().iter().sum();
    for p in 1..=model.p_max() {
        let scores = model.project(&x, p)?;
        let err = (&x - &model.reconstruct(&scores))
            .mapv(|v| v * v)
            .sum()
            .sqrt();
        println!(
            "p={p} variance={:>10.4} cumulative={:5.1}% reconstruction error={err:.4}",
            model.explained_variance()[p - 1],
            100.0 * model.explained_variance()[..p].iter().sum::<f64>() / total,
        );
    }
    Ok(())
}
