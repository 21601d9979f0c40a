//! Embed moons with GNUMAP and write a class-colored SVG scatter plot, plus
//! a line plot of the training loss.
//!
//! cargo run --release --example plot_embedding -- [out_dir]

use std::path::PathBuf;

use graphdr::datasets::{SyntheticKind, SyntheticSpec};
use graphdr::harness::{export_embedding_plot, render_line_svg, Series};
use graphdr::{gnumap_train, GnumapConfig};

fn main() -> graphdr::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("graphdr-plots"));
    let ds = SyntheticSpec::new(SyntheticKind::Moons).generate(0)?;
    let r = gnumap_train(&ds, &GnumapConfig::default())?;
    let scatter = out.join("moons_gnumap.svg");
    export_embedding_plot(&r.embedding, ds.labels.as_deref(), &scatter)?;
    let loss = Series {
        name: "gnumap loss".into(),
        points: r.loss_trace.iter().enumerate().map(|(i, &l)| (i as f64 + 1.0, l)).collect(),
    };
    let curve = out.join("moons_gnumap_loss.svg");
    std::fs::write(&curve, render_line_svg(&[loss], "epoch", "cross-entropy", true))?;
    println!("wrote {} and {}", scatter.display(), curve.display());
    Ok(())
}
