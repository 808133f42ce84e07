//! Writes a labeled feature table, hides most labels through a label table,
//! and reads both back.

use pcc::io::{load_feature_table, load_label_table, write_feature_table};
use pcc::{gen_blobs, LabeledDataset};

fn main() -> pcc::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let features = dir.path().join("blobs.csv");
    let labels = dir.path().join("labels.csv");

    let data = gen_blobs(12, 3, 4, 5.0, 1.0, 42)?;
    write_feature_table(&data, &features)?;
    println!("{}", std::fs::read_to_string(&features).expect("read back"));

    // keep the first label of each class; everything else becomes unlabeled
    let mut table = String::from("id,label\n");
    let mut seen = vec![false; data.num_classes()];
    for (id, label) in data.features.ids().iter().zip(&data.labels) {
        let class = label.expect("synthetic data is fully labeled");
        if !std::mem::replace(&mut seen[class], true) {
            table.push_str(&format!("{id},{}\n", data.classes[class]));
        }
    }
    std::fs::write(&labels, table).expect("write labels");

    let full: LabeledDataset = load_feature_table(&features)?;
    let partial = full.relabel(&load_label_table(&labels)?)?;
    println!(
        "loaded {} items, {} classes {:?}, {} labeled after relabel",
        partial.n(),
        partial.num_classes(),
        partial.classes,
        partial.labeled_count()
    );
    Ok(())
}
