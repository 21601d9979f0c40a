//! Run the classical reducers on the node features of a swiss roll graph.
//!
//! cargo run --release --example classical_methods -- [seed]

use graphdr::classical_dr::{
    isomap, laplacian_eigenmap, lle, pca, tsne, IsomapConfig, LaplacianConfig, LleConfig, PcaConfig, TsneConfig,
};
use graphdr::datasets::{SyntheticKind, SyntheticSpec};
use graphdr::metrics::{evaluate, EvalOptions, ACCURACY, SPEARMAN};

fn main() -> graphdr::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let ds = SyntheticSpec::new(SyntheticKind::Swissroll).with_n(400).generate(seed)?;
    let x = &ds.features;
    let runs = [
        pca(x, &PcaConfig::default())?,
        isomap(x, &IsomapConfig::default())?,
        lle(x, &LleConfig::default())?,
        laplacian_eigenmap(&ds.graph, Some(x), &LaplacianConfig::default())?,
        tsne(x, &TsneConfig { seed, ..Default::default() })?,
    ];
    let opts = EvalOptions { seed, ..Default::default() };
    for r in &runs {
        let report = evaluate(&ds, &r.embedding, &[ACCURACY, SPEARMAN], &opts)?;
        println!(
            "{:<19} accuracy {:.3}  spearman {:.3}  {:.2}s",
            r.method,
            report.get(ACCURACY).unwrap(),
            report.get(SPEARMAN).unwrap(),
            r.wall_seconds
        );
    }
    Ok(())
}
