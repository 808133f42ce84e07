//! Steps the dynamics by hand on a small ring and prints where each
//! particle is, then streams a JSON-lines trace of a short run.

use pcc::{pcc_init, Graph, PccConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pcc::Result<()> {
    // a 12-node ring with two chords, one seed per class on opposite sides
    let mut edges: Vec<(usize, usize)> = (0..12).map(|i| (i, (i + 1) % 12)).collect();
    edges.extend([(0, 6), (3, 9)]);
    let graph = Graph::from_edges(12, &edges)?;
    let mut labels = vec![None; 12];
    labels[1] = Some(0);
    labels[7] = Some(1);

    let config = PccConfig::default();
    let mut state = pcc_init(&graph, &labels, 2, &config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..8 {
        state.sweep(&mut rng);
        let walkers: Vec<String> = state
            .particles()
            .map(|p| {
                format!(
                    "team {} at {:>2} (strength {:.3})",
                    p.team, p.position, p.strength
                )
            })
            .collect();
        println!(
            "sweep {} | {} | mean max domination {:.4}",
            state.sweep_count(),
            walkers.join(", "),
            state.mean_max_domination()
        );
    }
    println!("domination at node 4: {:?}", state.domination(4));

    let config = PccConfig {
        max_sweeps: Some(3),
        ..config
    };
    let mut state = pcc_init(&graph, &labels, 2, &config)?;
    let mut stdout = std::io::stdout();
    let prediction = state.run(&mut rng, Some(&mut stdout))?;
    println!("labels after 3 sweeps: {:?}", prediction.labels);
    Ok(())
}
