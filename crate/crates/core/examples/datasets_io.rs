//! Generate each synthetic family, write it as a dataset directory, and
//! load it back.
//!
//! cargo run --release --example datasets_io -- [out_dir]

use std::path::PathBuf;

use graphdr::datasets::{load_dataset_dir, save_graph_dataset, SyntheticKind, SyntheticSpec};

fn main() -> graphdr::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("graphdr-datasets"));
    for kind in SyntheticKind::ALL {
        let ds = SyntheticSpec::new(kind).with_n(200).generate(0)?;
        let dir = out.join(kind.name());
        save_graph_dataset(&ds, &dir)?;
        let back = load_dataset_dir(&dir)?;
        println!(
            "{:<10} n {}  edges {}  features {}  classes {}  round trip {}  -> {}",
            kind.name(),
            back.n(),
            back.graph.num_edges(),
            back.features.cols(),
            back.n_classes(),
            if back.graph == ds.graph && back.labels == ds.labels { "ok" } else { "MISMATCH" },
            dir.display()
        );
    }
    Ok(())
}
