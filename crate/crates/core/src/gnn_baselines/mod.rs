//! GNN baselines sharing the GCN encoder: graph autoencoders (GAE, VGAE)
//! and two-view contrastive learners (GRACE, CCA-SSG).

mod augment;
mod contrastive;
mod gae;

pub use augment::{augment_graph, AugmentConfig};
pub use contrastive::{ccassg_loss, ccassg_train, grace_loss, grace_train, standardize_columns, ContrastConfig};
pub use gae::{gae_loss, gae_train, gaussian_kl, gaussian_kl_term, vgae_loss, vgae_train, GaeConfig};

use crate::diffengine::{bind, store_grads, AdamState, Parameter, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;

/// Each undirected edge once, as `(i, j)` with `i < j`.
pub(crate) fn node_pairs(g: &SparseGraph) -> Vec<(usize, usize)> {
    g.edges().into_iter().map(|(i, j, _)| (i, j)).collect()
}

/// Full-batch Adam over `params`. `step` records one epoch's loss given the
/// bound parameter vars; a non-finite loss aborts with a divergence error.
pub(crate) fn fit<F>(params: &mut [Parameter], epochs: usize, lr: f64, mut step: F) -> Result<Vec<f64>>
where
    F: FnMut(&mut Tape, &[Var], usize) -> Result<Var>,
{
    let mut adam = AdamState::new(params, lr);
    let mut trace = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let mut tape = Tape::new();
        let vars = bind(&mut tape, params);
        let loss = step(&mut tape, &vars, epoch)?;
        let value = tape.scalar(loss);
        if !value.is_finite() {
            return Err(Error::Divergence { epoch, loss: value });
        }
        trace.push(value);
        let grads = tape.backward(loss)?;
        store_grads(&tape, &grads, &vars, params);
        adam.step(params);
    }
    Ok(trace)
}
