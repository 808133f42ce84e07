//! Transductive semi-supervised classification with particle competition
//! and cooperation.
//!
//! The pipeline reduces feature vectors with PCA ([`pca`]), links each item
//! to its nearest neighbors ([`graph`]), and lets teams of particles spread
//! the few known labels across the graph ([`pcc`]). [`eval`] repeats this
//! under a stratified labeled-subset protocol and grid-searches the number
//! of components and neighbors. [`synth`] provides seeded test data and
//! [`io`] the CSV formats that connect the stages.
//!
//! ```
//! use pcc::{build_knn_graph, gen_blobs, pcc_run, PccConfig};
//!
//! let data = gen_blobs(60, 2, 2, 6.0, 1.0, 7).unwrap();
//! let graph = build_knn_graph(&data.features, 5).unwrap();
//! let mut labels = vec![None; data.n()];
//! labels[0] = Some(0);
//! labels[59] = Some(1);
//! let prediction = pcc_run(&graph, &labels, 2, &PccConfig::default()).unwrap();
//! assert_eq!(prediction.labels[1], 0);
//! ```

pub mod cli;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod pca;
pub mod pcc;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{
    accuracy, derive_seed, evaluate_once, grid_search, sample_labeled_mask, CellStats, GridResult,
    TrialSpec,
};
pub use graph::{build_knn_graph, graph_diagnostics, Graph, GraphReport};
pub use io::{FeatureMatrix, LabeledDataset};
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use pcc::{pcc_init, pcc_run, Particle, PccConfig, PccState, Prediction};
pub use synth::{gen_blobs, gen_moons};
