//! Score one embedding with the full metric suite, including the metrics
//! that are skipped because their inputs are missing.
//!
//! cargo run --release --example evaluate_metrics -- [seed]

use graphdr::classical_dr::{pca, PcaConfig};
use graphdr::datasets::{SyntheticKind, SyntheticSpec};
use graphdr::metrics::{evaluate, EvalOptions, REGISTRY};

fn main() -> graphdr::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let ds = SyntheticSpec::new(SyntheticKind::Circles).with_n(300).generate(seed)?;
    let emb = pca(&ds.features, &PcaConfig::default())?.embedding;
    let report = evaluate(&ds, &emb, &REGISTRY, &EvalOptions { seed, ..Default::default() })?;
    for (name, value) in &report.entries {
        println!("{name:<18} {value:>10.4}  ({:.3}s)", report.wall_seconds.get(name).copied().unwrap_or(0.0));
    }
    for (name, why) in &report.skipped {
        println!("{name:<18} skipped: {why}");
    }
    Ok(())
}
