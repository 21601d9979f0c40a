use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::gae::{finish, HasSeed};
use super::{augment_graph, fit, AugmentConfig};
use crate::datasets::GraphDataset;
use crate::diffengine::{gcn_forward, init_weights, InitScheme, Parameter, Tape, Var};
use crate::error::{Error, Result};
use crate::gnumap::EmbeddingResult;
use crate::graph::normalized_adjacency;
use crate::numerics::{DenseMatrix, Rng};

/// Settings for the two-view contrastive trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContrastConfig {
    /// GRACE temperature.
    pub tau: f64,
    /// CCA-SSG decorrelation weight.
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    pub out_dim: usize,
    pub init_scheme: InitScheme,
    pub seed: u64,
}

impl Default for ContrastConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            lambda: 0.1,
            epochs: 200,
            lr: 0.01,
            hidden: 64,
            out_dim: 2,
            init_scheme: InitScheme::XavierUniform,
            seed: 0,
        }
    }
}

impl ContrastConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = vec![];
        if !(self.tau > 0.0) {
            bad.push(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.lambda >= 0.0) {
            bad.push(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        if self.epochs == 0 {
            bad.push("epochs must be at least 1".into());
        }
        if self.hidden == 0 || self.out_dim == 0 {
            bad.push("hidden and out_dim must be at least 1".into());
        }
        if !(self.lr > 0.0) {
            bad.push(format!("lr must be positive, got {}", self.lr));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

impl HasSeed for ContrastConfig {
    fn seed(&self) -> u64 {
        self.seed
    }
}

/// Per-node `−log(e^{θ(uᵢ,vᵢ)/τ} / (Σₖ e^{θ(uᵢ,vₖ)/τ} + Σ_{k≠i} e^{θ(uᵢ,uₖ)/τ}))`
/// as an n×1 column, with θ the cosine similarity.
fn grace_side(tape: &mut Tape, u: Var, v: Var, tau: f64) -> Result<Var> {
    let vt = tape.transpose(v);
    let ut = tape.transpose(u);
    let cross = tape.matmul(u, vt)?;
    let cross = tape.scale(cross, 1.0 / tau);
    let own = tape.matmul(u, ut)?;
    let own = tape.scale(own, 1.0 / tau);
    let e_cross = tape.exp(cross);
    let e_own = tape.exp(own);
    let a = tape.row_sum(e_cross);
    let b = tape.row_sum(e_own);
    let self_term = tape.diag(e_own)?;
    let den = tape.add(a, b)?;
    let den = tape.sub(den, self_term)?;
    let log_den = tape.log(den);
    let pos = tape.diag(cross)?;
    tape.sub(log_den, pos)
}

/// Symmetrized GRACE objective `(1/2N) Σᵢ [ℓ(uᵢ,vᵢ) + ℓ(vᵢ,uᵢ)]`.
pub fn grace_loss(tape: &mut Tape, u: Var, v: Var, tau: f64) -> Result<Var> {
    let u = tape.row_normalize(u);
    let v = tape.row_normalize(v);
    let a = grace_side(tape, u, v, tau)?;
    let b = grace_side(tape, v, u, tau)?;
    let s = tape.add(a, b)?;
    let m = tape.mean(s);
    Ok(tape.scale(m, 0.5))
}

/// Centers each column, scales it to unit variance and divides by `√n`,
/// so that `ZᵀZ` is the column correlation matrix.
pub fn standardize_columns(tape: &mut Tape, z: Var) -> Result<Var> {
    let n = tape.value(z).rows() as f64;
    let mean = tape.col_mean(z);
    let c = tape.sub_row(z, mean)?;
    let sq = tape.mul(c, c)?;
    let var = tape.col_mean(sq);
    let var = tape.add_scalar(var, 1e-12);
    let inv_std = tape.pow(var, -0.5);
    let out = tape.mul_row(c, inv_std)?;
    Ok(tape.scale(out, 1.0 / n.sqrt()))
}

/// `‖U − V‖²_F + λ(‖UᵀU − I‖²_F + ‖VᵀV − I‖²_F)`.
pub fn ccassg_loss(tape: &mut Tape, u: Var, v: Var, lambda: f64) -> Result<Var> {
    let d = tape.value(u).cols();
    let diff = tape.sub(u, v)?;
    let sq = tape.mul(diff, diff)?;
    let inv = tape.sum(sq);
    let eye = tape.constant(DenseMatrix::identity(d));
    let mut dec = Vec::with_capacity(2);
    for w in [u, v] {
        let wt = tape.transpose(w);
        let g = tape.matmul(wt, w)?;
        let r = tape.sub(g, eye)?;
        let r2 = tape.mul(r, r)?;
        dec.push(tape.sum(r2));
    }
    let dec = tape.add(dec[0], dec[1])?;
    let dec = tape.scale(dec, lambda);
    tape.add(inv, dec)
}

#[derive(Clone, Copy)]
enum Objective {
    Grace,
    CcaSsg,
}

fn train_two_view(
    method: &str,
    objective: Objective,
    ds: &GraphDataset,
    aug: &AugmentConfig,
    cfg: &ContrastConfig,
) -> Result<EmbeddingResult> {
    cfg.validate()?;
    aug.validate()?;
    let start = Instant::now();
    let mut rng = Rng::derive(cfg.seed, 0);
    let mut view_rng = Rng::derive(cfg.seed, 1);
    let mut params = vec![
        Parameter::new("w0", init_weights(ds.features.cols(), cfg.hidden, cfg.init_scheme, &mut rng)),
        Parameter::new("w1", init_weights(cfg.hidden, cfg.out_dim, cfg.init_scheme, &mut rng)),
    ];
    let encode = |tape: &mut Tape, view: &GraphDataset, w: &[Var]| -> Result<Var> {
        let a = tape.constant(normalized_adjacency(&view.graph, true)?);
        let x = tape.constant(view.features.clone());
        gcn_forward(tape, a, x, w[0], w[1])
    };
    let trace = fit(&mut params, cfg.epochs, cfg.lr, |tape, w, _| {
        let v1 = augment_graph(ds, aug, &mut view_rng)?;
        let v2 = augment_graph(ds, aug, &mut view_rng)?;
        let u = encode(tape, &v1, w)?;
        let v = encode(tape, &v2, w)?;
        match objective {
            Objective::Grace => grace_loss(tape, u, v, cfg.tau),
            Objective::CcaSsg => {
                let u = standardize_columns(tape, u)?;
                let v = standardize_columns(tape, v)?;
                ccassg_loss(tape, u, v, cfg.lambda)
            }
        }
    })?;
    let mut tape = Tape::new();
    let w: Vec<Var> = params.iter().map(|p| tape.constant(p.value.clone())).collect();
    let z = encode(&mut tape, ds, &w)?;
    finish(method, &(cfg, aug), tape.value(z).clone(), trace, start)
}

impl HasSeed for (&ContrastConfig, &AugmentConfig) {
    fn seed(&self) -> u64 {
        self.0.seed
    }
}

/// GRACE: InfoNCE between two augmented views with inter- and intra-view
/// negatives. The embedding is the encoding of the unperturbed graph.
pub fn grace_train(ds: &GraphDataset, aug: &AugmentConfig, cfg: &ContrastConfig) -> Result<EmbeddingResult> {
    train_two_view("grace", Objective::Grace, ds, aug, cfg)
}

/// CCA-SSG: invariance between two standardized views plus a soft
/// decorrelation penalty.
pub fn ccassg_train(ds: &GraphDataset, aug: &AugmentConfig, cfg: &ContrastConfig) -> Result<EmbeddingResult> {
    train_two_view("cca_ssg", Objective::CcaSsg, ds, aug, cfg)
}
