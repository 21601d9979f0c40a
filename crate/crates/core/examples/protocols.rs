//! The evaluation protocols: runtime scaling in n, feature-dimension
//! reduction, robustness to generator noise, and
//! robustness to weight initialization.
//!
//! cargo run --release --example protocols -- [out_dir]

use std::path::PathBuf;

use graphdr::datasets::{SyntheticKind, SyntheticSpec};
use graphdr::harness::{robustness_init, robustness_noise, scalability_n, scalability_p, MethodEntry};
use graphdr::metrics::{ACCURACY, SPEARMAN};
use serde_json::json;

fn main() -> graphdr::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("graphdr-protocols"));
    let gnumap = MethodEntry::new("gnumap").with_params(json!({"epochs": 100}));
    let seeds = [0, 1];

    let blobs = SyntheticSpec::new(SyntheticKind::Blobs);
    let timing = scalability_n(&gnumap, &blobs, &[150, 300, 600], &seeds)?;
    timing.write(&out, "gnumap_n")?;
    println!("runtime ~ n^{:.2}", timing.slope);

    let moons = SyntheticSpec::new(SyntheticKind::Moons).with_n(200);
    for row in scalability_p(&gnumap, &moons, &[2, 5], &[0], &[ACCURACY, SPEARMAN])? {
        let p = row.components.map_or("all".to_string(), |p| p.to_string());
        match (&row.error, row.metrics.get(SPEARMAN)) {
            (Some(e), _) => println!("gnumap with {p:>3} feature components: failed: {e}"),
            (None, s) => println!("gnumap with {p:>3} feature components: accuracy {:?}, spearman {s:?}", row.metrics.get(ACCURACY)),
        }
    }

    let noise = robustness_noise(&gnumap, SyntheticKind::Moons, &[0.0, 0.1, 0.2, 0.3], &seeds, ACCURACY)?;
    println!("accuracy by noise level {:?}: {:?}", noise.levels, noise.means);

    let init = robustness_init(&gnumap, &moons, &["normal", "xavier_uniform", "xavier_normal"], &seeds, ACCURACY)?;
    println!("accuracy by init scheme: {:?} (range {:.3})", init.means, init.range);
    Ok(())
}
