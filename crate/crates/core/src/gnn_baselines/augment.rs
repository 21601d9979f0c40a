use serde::{Deserialize, Serialize};

use crate::datasets::GraphDataset;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::numerics::Rng;

/// Edge-drop and feature-mask rates for one augmented view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub p_edge_drop: f64,
    pub p_feat_mask: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            p_edge_drop: 0.2,
            p_feat_mask: 0.2,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = vec![];
        for (name, p) in [("p_edge_drop", self.p_edge_drop), ("p_feat_mask", self.p_feat_mask)] {
            if !(0.0..=1.0).contains(&p) {
                bad.push(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

/// A randomly perturbed copy of `ds`: every undirected edge is dropped
/// with probability `p_edge_drop`, and every feature column is zeroed for
/// all nodes with probability `p_feat_mask`. Labels and coordinates are
/// carried over unchanged.
pub fn augment_graph(ds: &GraphDataset, cfg: &AugmentConfig, rng: &mut Rng) -> Result<GraphDataset> {
    cfg.validate()?;
    let kept: Vec<_> = ds
        .graph
        .edges()
        .into_iter()
        .filter(|_| !rng.bernoulli(cfg.p_edge_drop))
        .collect();
    let graph = SparseGraph::from_edges(ds.n(), &kept)?;
    let mask: Vec<bool> = (0..ds.features.cols()).map(|_| rng.bernoulli(cfg.p_feat_mask)).collect();
    let mut features = ds.features.clone();
    for i in 0..features.rows() {
        for (v, &m) in features.row_mut(i).iter_mut().zip(&mask) {
            if m {
                *v = 0.0;
            }
        }
    }
    let mut view = ds.with_features(features)?;
    view.graph = graph;
    Ok(view)
}
