//! Embedding-quality metrics: supervised and unsupervised global geometry,
//! local neighborhood preservation, density preservation and cluster
//! validity.

mod classify;
mod cluster;
mod frechet;
mod geometry;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use classify::{classification_accuracy, default_gamma, stratified_folds, KernelClassifier, SVM_C, SVM_TOL};
pub use cluster::{calinski_harabasz, davies_bouldin, silhouette};
pub use frechet::{frechet_distance, gaussian_moments, FrechetDistance, FRECHET_DRIFT_TOL};
pub use geometry::{
    adjusted_r2, average_ranks, density_correlation, geodesic_spearman, knn_overlap, least_squares, local_radius,
    pearson, spearman, DensityCorrelation, OVERLAP_K, RADIUS_FLOOR, SPEARMAN_SAMPLE,
};
pub(crate) use geometry::graph_local_radius;

use crate::datasets::GraphDataset;
use crate::error::{Error, Result};
use crate::gnumap::{UMAP_ALPHA, UMAP_BETA};
use crate::numerics::DenseMatrix;

pub const ACCURACY: &str = "accuracy";
pub const ADJUSTED_R2: &str = "adjusted_r2";
pub const SPEARMAN: &str = "spearman";
pub const KNN_OVERLAP: &str = "knn_overlap";
pub const DENSITY_CORR: &str = "density_corr";
pub const DAVIES_BOULDIN: &str = "davies_bouldin";
pub const CALINSKI_HARABASZ: &str = "calinski_harabasz";
pub const SILHOUETTE: &str = "silhouette";
pub const FRECHET: &str = "frechet";

/// Every metric name the harness accepts.
pub const REGISTRY: [&str; 9] = [
    ACCURACY,
    ADJUSTED_R2,
    SPEARMAN,
    KNN_OVERLAP,
    DENSITY_CORR,
    DAVIES_BOULDIN,
    CALINSKI_HARABASZ,
    SILHOUETTE,
    FRECHET,
];

pub fn is_registered(name: &str) -> bool {
    REGISTRY.contains(&name)
}

/// Stand-in for infinite index values so every stored value stays finite.
pub const INFINITY_SENTINEL: f64 = 1e300;

/// Metric values for one (dataset, method, seed) cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub entries: BTreeMap<String, f64>,
    pub wall_seconds: BTreeMap<String, f64>,
    /// Metrics that were requested but do not apply, with the reason.
    pub skipped: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

impl MetricsReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.get(name).copied()
    }
}

/// Settings shared by the metrics that need them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub folds: usize,
    pub overlap_k: usize,
    pub spearman_sample: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            overlap_k: OVERLAP_K,
            spearman_sample: SPEARMAN_SAMPLE,
            alpha: UMAP_ALPHA,
            beta: UMAP_BETA,
            seed: 0,
        }
    }
}

enum Outcome {
    Value(f64),
    Skip(String),
}

/// Computes the named metrics of `emb` against `ds`.
///
/// Metrics whose inputs are missing (labels, intrinsic coordinate, matching
/// ground-truth dimension) are recorded under `skipped` rather than failing.
pub fn evaluate(ds: &GraphDataset, emb: &DenseMatrix, names: &[&str], opts: &EvalOptions) -> Result<MetricsReport> {
    if emb.rows() != ds.n() {
        return Err(Error::shape(format!("{} embedding rows for {} nodes", emb.rows(), ds.n())));
    }
    let unknown: Vec<String> = names
        .iter()
        .filter(|n| !is_registered(n))
        .map(|n| format!("unknown metric {n:?}"))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Validation(unknown));
    }
    let mut report = MetricsReport {
        dataset: ds.name.clone(),
        seed: opts.seed,
        ..Default::default()
    };
    for &name in names {
        let start = Instant::now();
        let outcome = compute(ds, emb, name, opts, &mut report.warnings)?;
        report.wall_seconds.insert(name.to_string(), start.elapsed().as_secs_f64());
        match outcome {
            Outcome::Value(v) => {
                let v = if v.is_finite() {
                    v
                } else {
                    report.warnings.push(format!("{name} was {v}; stored as sentinel"));
                    INFINITY_SENTINEL.copysign(v)
                };
                report.entries.insert(name.to_string(), v);
            }
            Outcome::Skip(why) => {
                report.skipped.insert(name.to_string(), why);
            }
        }
    }
    Ok(report)
}

fn compute(ds: &GraphDataset, emb: &DenseMatrix, name: &str, o: &EvalOptions, warnings: &mut Vec<String>) -> Result<Outcome> {
    let labels = ds.labels.as_deref();
    let need_labels = || Outcome::Skip("dataset has no labels".into());
    Ok(match name {
        ACCURACY => match labels {
            Some(l) => Outcome::Value(classification_accuracy(emb, l, o.folds, o.seed)?),
            None => need_labels(),
        },
        ADJUSTED_R2 => match &ds.intrinsic {
            Some(t) => Outcome::Value(adjusted_r2(emb, t, o.folds, o.seed)?),
            None => Outcome::Skip("dataset has no intrinsic coordinate".into()),
        },
        SPEARMAN => Outcome::Value(geodesic_spearman(emb, &ds.graph, o.spearman_sample, o.seed)?),
        KNN_OVERLAP => Outcome::Value(knn_overlap(emb, &ds.graph, o.overlap_k.min(ds.n() - 1))?),
        DENSITY_CORR => match &ds.ground_truth_coords {
            Some(x) => {
                let d = density_correlation(&ds.graph, x, emb, o.alpha, o.beta)?;
                if d.clamped > 0 {
                    warnings.push(format!("{DENSITY_CORR}: {} radii clamped", d.clamped));
                }
                Outcome::Value(d.value)
            }
            None => Outcome::Skip("dataset has no ground-truth coordinates".into()),
        },
        DAVIES_BOULDIN => match labels {
            Some(l) => Outcome::Value(davies_bouldin(emb, l)?),
            None => need_labels(),
        },
        CALINSKI_HARABASZ => match labels {
            Some(l) => Outcome::Value(calinski_harabasz(emb, l)?),
            None => need_labels(),
        },
        SILHOUETTE => match labels {
            Some(l) => Outcome::Value(silhouette(emb, l)?),
            None => need_labels(),
        },
        FRECHET => match &ds.ground_truth_coords {
            Some(x) if x.cols() == emb.cols() => {
                let f = frechet_distance(emb, x)?;
                if f.drift_flagged {
                    warnings.push(format!("{FRECHET}: covariance square root clipped negative eigenvalues"));
                }
                Outcome::Value(f.value)
            }
            Some(x) => Outcome::Skip(format!(
                "ground truth has {} dimensions, embedding {}",
                x.cols(),
                emb.cols()
            )),
            None => Outcome::Skip("dataset has no ground-truth coordinates".into()),
        },
        _ => unreachable!("names validated above"),
    })
}
