//! Grid search over p and k on 8-dimensional blobs, written as a heatmap CSV.

use pcc::io::{load_heatmap, write_heatmap};
use pcc::{gen_blobs, grid_search, PccConfig, TrialSpec};

fn main() -> pcc::Result<()> {
    let data = gen_blobs(240, 3, 8, 3.0, 1.0, 8)?;
    let spec = TrialSpec {
        labeled_fraction: 0.1,
        repetitions: 5,
        p_range: 1..=4,
        k_range: 1..=6,
        base_seed: 2024,
    };
    let grid = grid_search(&data, &spec, &PccConfig::default())?;

    print!("p\\k ");
    for k in &grid.k_values {
        print!("{k:>7}");
    }
    println!();
    for (p, row) in grid.p_values.iter().zip(&grid.cells) {
        print!("{p:>3} ");
        for cell in row {
            print!("{:>7.3}", cell.mean);
        }
        println!();
    }
    println!("{}", grid.summary_line(spec.labeled_fraction, "synthetic"));

    let path = std::env::temp_dir().join("grid_heatmap.csv");
    write_heatmap(&grid, &path)?;
    let heatmap = load_heatmap(&path)?;
    println!("{} reloaded, best {:?}", path.display(), heatmap.best());
    Ok(())
}
