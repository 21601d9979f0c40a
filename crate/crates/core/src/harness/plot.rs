use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Ten-color categorical palette; class `c` gets `PALETTE[c % 10]`.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Axis { lo: 0.0, hi: 1.0 };
        }
        let pad = if hi > lo { 0.05 * (hi - lo) } else { 1.0 };
        Axis { lo: lo - pad, hi: hi + pad }
    }

    /// Maps into `[0, 1]`.
    fn unit(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn frame(out: &mut String, x: &Axis, y: &Axis, xlabel: &str, ylabel: &str) {
    let inner = SIZE - 2.0 * MARGIN;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}" fill="none" stroke="black"/>"#
    );
    let fy = SIZE - MARGIN + 14.0;
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{fy}" font-size="10">{:.3}</text>"#, x.lo);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{fy}" font-size="10" text-anchor="end">{:.3}</text>"#,
        SIZE - MARGIN,
        x.hi
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, SIZE - MARGIN, y.lo);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, MARGIN + 10.0, y.hi);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, SIZE / 2.0, SIZE - 8.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="12" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 12 {})">{}</text>"#,
        SIZE / 2.0,
        SIZE / 2.0,
        escape(ylabel)
    );
}

fn px(a: &Axis, v: f64) -> f64 {
    MARGIN + a.unit(v) * (SIZE - 2.0 * MARGIN)
}

fn py(a: &Axis, v: f64) -> f64 {
    SIZE - MARGIN - a.unit(v) * (SIZE - 2.0 * MARGIN)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter plot of a 2-D embedding, one palette color per class. The
/// output bytes depend only on the inputs.
pub fn render_scatter_svg(emb: &DenseMatrix, labels: Option<&[usize]>) -> Result<String> {
    if emb.cols() != 2 {
        return Err(Error::contract(format!("scatter plots need 2 columns, got {}", emb.cols())));
    }
    if let Some(l) = labels {
        if l.len() != emb.rows() {
            return Err(Error::shape(format!("{} labels for {} points", l.len(), emb.rows())));
        }
    }
    if !emb.is_finite() {
        return Err(Error::contract("embedding has non-finite coordinates"));
    }
    let x = Axis::fit((0..emb.rows()).map(|i| emb[(i, 0)]));
    let y = Axis::fit((0..emb.rows()).map(|i| emb[(i, 1)]));
    let mut out = String::new();
    frame(&mut out, &x, &y, "dim 1", "dim 2");
    for i in 0..emb.rows() {
        let color = PALETTE[labels.map_or(0, |l| l[i]) % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{color}" fill-opacity="0.8"/>"#,
            px(&x, emb[(i, 0)]),
            py(&y, emb[(i, 1)])
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes [`render_scatter_svg`] to `path`.
pub fn export_embedding_plot(emb: &DenseMatrix, labels: Option<&[usize]>, path: &Path) -> Result<()> {
    let svg = render_scatter_svg(emb, labels)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, svg)?;
    Ok(())
}

/// A named polyline for [`render_line_svg`].
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Line plot of one or more series; with `log_log` both axes show log10
/// of the values (non-positive values are dropped).
pub fn render_line_svg(series: &[Series], xlabel: &str, ylabel: &str, log_log: bool) -> String {
    let tr = |(a, b): (f64, f64)| -> Option<(f64, f64)> {
        if log_log {
            (a > 0.0 && b > 0.0).then(|| (a.log10(), b.log10()))
        } else {
            (a.is_finite() && b.is_finite()).then_some((a, b))
        }
    };
    let pts: Vec<Vec<(f64, f64)>> = series.iter().map(|s| s.points.iter().copied().filter_map(tr).collect()).collect();
    let x = Axis::fit(pts.iter().flatten().map(|p| p.0));
    let y = Axis::fit(pts.iter().flatten().map(|p| p.1));
    let (xl, yl) = if log_log {
        (format!("log10 {xlabel}"), format!("log10 {ylabel}"))
    } else {
        (xlabel.to_string(), ylabel.to_string())
    };
    let mut out = String::new();
    frame(&mut out, &x, &y, &xl, &yl);
    for (k, (s, p)) in series.iter().zip(&pts).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = p.iter().map(|&(a, b)| format!("{:.3},{:.3}", px(&x, a), py(&y, b))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
        for &(a, b) in p {
            let _ = writeln!(out, r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{color}"/>"#, px(&x, a), py(&y, b));
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 16.0 + 14.0 * k as f64,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}
