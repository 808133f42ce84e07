//! Two moons with ten labels per moon: the random rule alone, the greedy rule
//! alone, and the default mix.

use pcc::{build_knn_graph, derive_seed, eval::evaluate_on_graph, gen_moons, PccConfig};

fn main() -> pcc::Result<()> {
    let data = gen_moons(400, 0.08, 21)?;
    let truth = data.truth()?;
    let graph = build_knn_graph(&data.features, 6)?;

    for p_grd in [0.0, 0.6, 1.0] {
        let config = PccConfig {
            p_grd,
            ..PccConfig::default()
        };
        let runs: Vec<f64> = (0..10)
            .map(|r| evaluate_on_graph(&graph, &truth, 2, 0.05, derive_seed(77, &[r]), &config))
            .collect::<pcc::Result<_>>()?;
        let mean = runs.iter().sum::<f64>() / runs.len() as f64;
        let worst = runs.iter().copied().fold(1.0, f64::min);
        println!("p_grd={p_grd:.1} mean accuracy {mean:.4}, worst of 10 {worst:.4}");
    }
    Ok(())
}
