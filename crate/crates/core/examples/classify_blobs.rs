//! Four Gaussian blobs in 10 dimensions, 5% of labels known. Reduce, build
//! the graph, run the particles and score the unlabeled items.

use pcc::io::write_predictions;
use pcc::{
    accuracy, build_knn_graph, gen_blobs, pca_fit, pca_transform, pcc_run, sample_labeled_mask,
    LabeledDataset, PccConfig,
};

fn main() -> pcc::Result<()> {
    let data = gen_blobs(800, 4, 10, 4.0, 1.0, 11)?;
    let truth = data.truth()?;
    let mask = sample_labeled_mask(&truth, data.num_classes(), 0.05, 5)?;
    let labels: Vec<Option<usize>> = truth
        .iter()
        .zip(&mask)
        .map(|(&c, &keep)| keep.then_some(c))
        .collect();

    let model = pca_fit(&data.features, 3)?;
    let reduced = pca_transform(&model, &data.features, 3)?;
    let graph = build_knn_graph(&reduced, 7)?;

    let config = PccConfig {
        seed: 9,
        ..PccConfig::default()
    };
    let prediction = pcc_run(&graph, &labels, data.num_classes(), &config)?;
    println!(
        "labeled {} of {}, {} sweeps (converged: {}), accuracy on the rest {:.4}",
        mask.iter().filter(|&&m| m).count(),
        data.n(),
        prediction.sweeps,
        prediction.converged,
        accuracy(&prediction, &truth, &mask)?
    );

    let partial = LabeledDataset::new(data.features.clone(), labels, data.classes.clone())?;
    let out = std::env::temp_dir().join("classify_blobs_predictions.csv");
    write_predictions(&partial, &prediction, &out)?;
    println!("predictions written to {}", out.display());
    Ok(())
}
