//! Train the two-view contrastive baselines (GRACE, CCA-SSG) on moons.
//!
//! cargo run --release --example contrastive_baselines -- [seed]

use graphdr::datasets::{SyntheticKind, SyntheticSpec};
use graphdr::gnn_baselines::{ccassg_train, grace_train, AugmentConfig, ContrastConfig};
use graphdr::metrics::{evaluate, EvalOptions, ACCURACY, KNN_OVERLAP, SILHOUETTE};

fn main() -> graphdr::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let ds = SyntheticSpec::new(SyntheticKind::Moons).with_n(300).generate(seed)?;
    let aug = AugmentConfig::default();
    let cfg = ContrastConfig { seed, ..Default::default() };
    let opts = EvalOptions { seed, ..Default::default() };
    for r in [grace_train(&ds, &aug, &cfg)?, ccassg_train(&ds, &aug, &cfg)?] {
        let report = evaluate(&ds, &r.embedding, &[ACCURACY, KNN_OVERLAP, SILHOUETTE], &opts)?;
        println!(
            "{:<8} accuracy {:.3}  overlap {:.3}  silhouette {:.3}  {:.1}s",
            r.method,
            report.get(ACCURACY).unwrap(),
            report.get(KNN_OVERLAP).unwrap(),
            report.get(SILHOUETTE).unwrap(),
            r.wall_seconds
        );
    }
    Ok(())
}
