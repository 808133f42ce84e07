//! k-NN graphs over the two-moons data: how connectivity changes with k.

use pcc::io::write_adjacency;
use pcc::{build_knn_graph, gen_moons, graph_diagnostics};

fn main() -> pcc::Result<()> {
    let data = gen_moons(300, 0.08, 3)?;
    let truth = data.truth()?;
    for k in [1, 2, 3, 5, 8, 12] {
        let graph = build_knn_graph(&data.features, k)?;
        let report = graph_diagnostics(&graph);
        let crossing = graph.edges().filter(|&(a, b)| truth[a] != truth[b]).count();
        println!("k={k:<2} {report} cross-moon edges={crossing}");
    }

    println!("\nfirst rows of the k=3 adjacency dump:");
    let graph = build_knn_graph(&data.features, 3)?;
    let mut dump = Vec::new();
    write_adjacency(&graph, Some(data.features.ids()), &mut dump).expect("in-memory write");
    for line in String::from_utf8_lossy(&dump).lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}
