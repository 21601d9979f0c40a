//! Build a small benchmark config in code, run it, then resume it: the
//! second pass reuses every record and reproduces the summary exactly.
//!
//! cargo run --release --example benchmark -- [out_dir]

use std::path::PathBuf;

use graphdr::datasets::{SyntheticKind, SyntheticSpec};
use graphdr::harness::{run_benchmark, summary_csv, BenchOptions, DatasetEntry, ExperimentConfig, MethodEntry};
use serde_json::json;

fn main() -> graphdr::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("graphdr-bench"));
    let moons = DatasetEntry::Synthetic(SyntheticSpec::new(SyntheticKind::Moons).with_n(200));
    let mut umap = MethodEntry::new("umap").with_params(json!({"epochs": 100}));
    umap.grid.insert("n_neighbors".into(), vec![json!(10), json!(20)]);
    let mut cfg = ExperimentConfig::new(
        vec![moons],
        vec![MethodEntry::new("gnumap").with_params(json!({"epochs": 100})), MethodEntry::new("pca"), umap],
    );
    cfg.metrics = vec!["accuracy".into(), "knn_overlap".into()];
    cfg.repeats = 3;
    cfg.output_dir = out.clone();
    cfg.validate()?;

    let first = run_benchmark(&cfg, &BenchOptions::default())?;
    for s in &first.selections {
        println!("{} {}: picked cell {} of {} {}", s.dataset, s.method, s.cell, s.n_cells, s.params);
    }
    print!("{}", summary_csv(&first.summary));

    let again = run_benchmark(&cfg, &BenchOptions { resume: true, ..Default::default() })?;
    println!(
        "resume: {} executed, {} reused, summary identical: {}",
        again.executed,
        again.resumed,
        summary_csv(&again.summary) == summary_csv(&first.summary)
    );
    println!("outputs in {}", out.display());
    Ok(())
}
