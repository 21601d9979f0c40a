//! Train GAE and VGAE on blobs and compare them with GNUMAP.
//!
//! cargo run --release --example gae_baselines -- [seed]

use graphdr::datasets::{SyntheticKind, SyntheticSpec};
use graphdr::gnn_baselines::{gae_train, vgae_train, GaeConfig};
use graphdr::metrics::{evaluate, EvalOptions, ACCURACY, KNN_OVERLAP};
use graphdr::{gnumap_train, EmbeddingResult, GnumapConfig};

fn main() -> graphdr::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let ds = SyntheticSpec::new(SyntheticKind::Blobs).generate(seed)?;
    let gae_cfg = GaeConfig { seed, ..Default::default() };
    let runs: Vec<EmbeddingResult> = vec![
        gnumap_train(&ds, &GnumapConfig { seed, ..Default::default() })?,
        gae_train(&ds, &gae_cfg)?,
        vgae_train(&ds, &gae_cfg)?,
    ];
    let opts = EvalOptions { seed, ..Default::default() };
    for r in &runs {
        let report = evaluate(&ds, &r.embedding, &[ACCURACY, KNN_OVERLAP], &opts)?;
        println!(
            "{:<7} accuracy {:.3}  overlap {:.3}  final loss {:.2}  {:.1}s",
            r.method,
            report.get(ACCURACY).unwrap(),
            report.get(KNN_OVERLAP).unwrap(),
            r.loss_trace.last().copied().unwrap_or(f64::NAN),
            r.wall_seconds
        );
    }
    Ok(())
}
