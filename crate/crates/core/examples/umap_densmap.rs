//! UMAP against DensMAP: the density term trades a little cross-entropy for
//! agreement between local radii in feature space and in the embedding.
//!
//! cargo run --release --example umap_densmap -- [seed]

use graphdr::classical_dr::{densmap, fit_ab, fuzzy_simplicial_set, umap_euclidean, DensmapConfig, UmapConfig};
use graphdr::datasets::{SyntheticKind, SyntheticSpec};
use graphdr::gnumap::{UMAP_ALPHA, UMAP_BETA};
use graphdr::metrics::{density_correlation, evaluate, EvalOptions, ACCURACY, DENSITY_CORR};

fn main() -> graphdr::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let ds = SyntheticSpec::new(SyntheticKind::Swissroll).with_n(300).generate(seed)?;
    let umap_cfg = UmapConfig { seed, ..Default::default() };

    let fuzzy = fuzzy_simplicial_set(&ds.features, umap_cfg.n_neighbors)?;
    println!(
        "fuzzy graph: {} edges, {} rows on the tied-neighbor limit",
        fuzzy.p.num_edges(),
        fuzzy.degenerate_rows.len()
    );
    let (a, b) = fit_ab(1.0, 0.5)?;
    println!("curve fit for min_dist 0.5: a = {a:.3}, b = {b:.3}");

    let opts = EvalOptions { seed, ..Default::default() };
    let runs = [
        umap_euclidean(&ds.features, &umap_cfg)?,
        densmap(&ds.features, &DensmapConfig { umap: umap_cfg.clone(), ..Default::default() })?,
    ];
    for r in &runs {
        let report = evaluate(&ds, &r.embedding, &[ACCURACY, DENSITY_CORR], &opts)?;
        // the correlation DensMAP optimizes: radii on the fuzzy feature graph
        let fuzzy_corr = density_correlation(&fuzzy.p, &ds.features, &r.embedding, UMAP_ALPHA, UMAP_BETA)?;
        println!(
            "{:<8} accuracy {:.3}  density corr (fuzzy graph) {:.3}  (data graph) {:.3}  {:.1}s  warnings {:?}",
            r.method,
            report.get(ACCURACY).unwrap(),
            fuzzy_corr.value,
            report.get(DENSITY_CORR).unwrap(),
            r.wall_seconds,
            r.warnings
        );
    }
    Ok(())
}
