//! Train GNUMAP on each synthetic family and print the headline metrics.
//!
//! cargo run --example gnumap_synthetic -- [seeds]

use graphdr::datasets::{SyntheticKind, SyntheticSpec};
use graphdr::metrics::{evaluate, EvalOptions, ACCURACY, KNN_OVERLAP, SPEARMAN};
use graphdr::{gnumap_train, GnumapConfig};

fn main() -> graphdr::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    for kind in SyntheticKind::ALL {
        let spec = SyntheticSpec::new(kind);
        let mut sums = [0.0; 4];
        for seed in 0..seeds {
            let ds = spec.generate(seed)?;
            let cfg = GnumapConfig { seed, ..Default::default() };
            let res = gnumap_train(&ds, &cfg)?;
            let opts = EvalOptions { seed, ..Default::default() };
            let report = evaluate(&ds, &res.embedding, &[ACCURACY, SPEARMAN, KNN_OVERLAP], &opts)?;
            sums[0] += report.get(ACCURACY).unwrap();
            sums[1] += report.get(SPEARMAN).unwrap();
            sums[2] += report.get(KNN_OVERLAP).unwrap();
            sums[3] += res.wall_seconds;
        }
        let m = sums.map(|s| s / seeds as f64);
        println!(
            "{kind:<10} accuracy {:.3}  spearman {:.3}  overlap {:.3}  train {:.1}s",
            m[0], m[1], m[2], m[3]
        );
    }
    Ok(())
}
