use std::rc::Rc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{fit, node_pairs};
use crate::datasets::GraphDataset;
use crate::diffengine::{gcn_forward, init_weights, InitScheme, Pairs, Parameter, Tape, Var};
use crate::error::{Error, Result};
use crate::gnumap::EmbeddingResult;
use crate::graph::{negative_edge_sample, normalized_adjacency};
use crate::numerics::{DenseMatrix, Rng};

/// Settings shared by the GAE and VGAE trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaeConfig {
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    pub out_dim: usize,
    /// Added inside the logs of the reconstruction loss.
    pub eps: f64,
    pub init_scheme: InitScheme,
    pub seed: u64,
}

impl Default for GaeConfig {
    fn default() -> Self {
        Self {
            epochs: 400,
            lr: 0.01,
            hidden: 64,
            out_dim: 2,
            eps: 1e-15,
            init_scheme: InitScheme::XavierUniform,
            seed: 0,
        }
    }
}

impl GaeConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = vec![];
        if self.epochs == 0 {
            bad.push("epochs must be at least 1".into());
        }
        if self.hidden == 0 || self.out_dim == 0 {
            bad.push("hidden and out_dim must be at least 1".into());
        }
        if !(self.lr > 0.0) {
            bad.push(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.eps >= 0.0) {
            bad.push(format!("eps must be nonnegative, got {}", self.eps));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

/// Inner-product decoder loss:
/// `−mean log(σ(zᵢ·zⱼ)+ε)` over `pos` plus `−mean log(1−σ(zᵢ·zⱼ)+ε)` over `neg`.
pub fn gae_loss(tape: &mut Tape, z: Var, pos: Pairs, neg: Pairs, eps: f64) -> Result<Var> {
    let term = |tape: &mut Tape, pairs: Pairs, positive: bool| -> Result<Var> {
        let dots = tape.pair_dot(z, pairs)?;
        let s = tape.sigmoid(dots);
        let p = if positive {
            s
        } else {
            let neg_s = tape.scale(s, -1.0);
            tape.add_scalar(neg_s, 1.0)
        };
        let p = tape.add_scalar(p, eps);
        let l = tape.log(p);
        let m = tape.mean(l);
        Ok(tape.scale(m, -1.0))
    };
    let a = term(tape, pos, true)?;
    let b = term(tape, neg, false)?;
    tape.add(a, b)
}

/// `−½ Σ (1 + 2 log σ − μ² − σ²)` for a diagonal Gaussian against N(0, I).
pub fn gaussian_kl(mu: &DenseMatrix, log_sigma: &DenseMatrix) -> f64 {
    -0.5 * mu
        .data()
        .iter()
        .zip(log_sigma.data())
        .map(|(&m, &ls)| 1.0 + 2.0 * ls - m * m - (2.0 * ls).exp())
        .sum::<f64>()
}

/// Tape version of [`gaussian_kl`], divided by `norm`.
pub fn gaussian_kl_term(tape: &mut Tape, mu: Var, log_sigma: Var, norm: f64) -> Result<Var> {
    let two_ls = tape.scale(log_sigma, 2.0);
    let var = tape.exp(two_ls);
    let mu2 = tape.mul(mu, mu)?;
    let a = tape.add_scalar(two_ls, 1.0);
    let a = tape.sub(a, mu2)?;
    let a = tape.sub(a, var)?;
    let s = tape.sum(a);
    Ok(tape.scale(s, -0.5 / norm))
}

/// Reparameterized VGAE objective: reconstruction of `z = μ + σ⊙ξ` plus
/// the KL term averaged over nodes.
pub fn vgae_loss(
    tape: &mut Tape,
    mu: Var,
    log_sigma: Var,
    xi: &DenseMatrix,
    pos: Pairs,
    neg: Pairs,
    eps: f64,
) -> Result<Var> {
    let n = tape.value(mu).rows() as f64;
    let sigma = tape.exp(log_sigma);
    let xi = tape.constant(xi.clone());
    let noise = tape.mul(sigma, xi)?;
    let z = tape.add(mu, noise)?;
    let recon = gae_loss(tape, z, pos, neg, eps)?;
    let kl = gaussian_kl_term(tape, mu, log_sigma, n)?;
    tape.add(recon, kl)
}

fn check_input(ds: &GraphDataset) -> Result<()> {
    ds.graph.ensure_connected()?;
    if ds.graph.num_edges() == 0 {
        return Err(Error::contract("graph has no edges"));
    }
    Ok(())
}

/// Graph autoencoder: two-layer GCN encoder, inner-product decoder, and
/// `|E|` fresh negative pairs per epoch.
pub fn gae_train(ds: &GraphDataset, cfg: &GaeConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    check_input(ds)?;
    let start = Instant::now();
    let mut rng = Rng::derive(cfg.seed, 0);
    let mut neg_rng = Rng::derive(cfg.seed, 1);
    let adj = Rc::new(normalized_adjacency(&ds.graph, true)?);
    let x = Rc::new(ds.features.clone());
    let mut params = vec![
        Parameter::new("w0", init_weights(ds.features.cols(), cfg.hidden, cfg.init_scheme, &mut rng)),
        Parameter::new("w1", init_weights(cfg.hidden, cfg.out_dim, cfg.init_scheme, &mut rng)),
    ];
    let pos: Pairs = Rc::new(node_pairs(&ds.graph));
    let trace = fit(&mut params, cfg.epochs, cfg.lr, |tape, w, _| {
        let neg = Rc::new(negative_edge_sample(&ds.graph, pos.len(), &mut neg_rng)?);
        let a = tape.constant_rc(adj.clone());
        let xv = tape.constant_rc(x.clone());
        let z = gcn_forward(tape, a, xv, w[0], w[1])?;
        gae_loss(tape, z, pos.clone(), neg, cfg.eps)
    })?;
    let mut tape = Tape::new();
    let (a, xv) = (tape.constant_rc(adj), tape.constant_rc(x));
    let (w0, w1) = (tape.constant(params[0].value.clone()), tape.constant(params[1].value.clone()));
    let z = gcn_forward(&mut tape, a, xv, w0, w1)?;
    finish("gae", cfg, tape.value(z).clone(), trace, start)
}

/// Variational graph autoencoder. A shared first GCN layer feeds two
/// output heads for `μ` and `log σ`; the embedding returned is `μ`.
pub fn vgae_train(ds: &GraphDataset, cfg: &GaeConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    check_input(ds)?;
    let start = Instant::now();
    let n = ds.n();
    let mut rng = Rng::derive(cfg.seed, 0);
    let mut neg_rng = Rng::derive(cfg.seed, 1);
    let mut noise_rng = Rng::derive(cfg.seed, 2);
    let adj = Rc::new(normalized_adjacency(&ds.graph, true)?);
    let x = Rc::new(ds.features.clone());
    let mut params = vec![
        Parameter::new("w0", init_weights(ds.features.cols(), cfg.hidden, cfg.init_scheme, &mut rng)),
        Parameter::new("w_mu", init_weights(cfg.hidden, cfg.out_dim, cfg.init_scheme, &mut rng)),
        Parameter::new("w_sigma", init_weights(cfg.hidden, cfg.out_dim, cfg.init_scheme, &mut rng)),
    ];
    let pos: Pairs = Rc::new(node_pairs(&ds.graph));
    let heads = |tape: &mut Tape, w: &[Var]| -> Result<(Var, Var)> {
        let a = tape.constant_rc(adj.clone());
        let xv = tape.constant_rc(x.clone());
        let mu = gcn_forward(tape, a, xv, w[0], w[1])?;
        let ls = gcn_forward(tape, a, xv, w[0], w[2])?;
        Ok((mu, ls))
    };
    let trace = fit(&mut params, cfg.epochs, cfg.lr, |tape, w, _| {
        let neg = Rc::new(negative_edge_sample(&ds.graph, pos.len(), &mut neg_rng)?);
        let xi = DenseMatrix::from_fn(n, cfg.out_dim, |_, _| noise_rng.normal());
        let (mu, ls) = heads(tape, w)?;
        vgae_loss(tape, mu, ls, &xi, pos.clone(), neg, cfg.eps)
    })?;
    let mut tape = Tape::new();
    let w: Vec<Var> = params.iter().map(|p| tape.constant(p.value.clone())).collect();
    let (mu, _) = heads(&mut tape, &w)?;
    finish("vgae", cfg, tape.value(mu).clone(), trace, start)
}

pub(super) fn finish(
    method: &str,
    cfg: &(impl Serialize + HasSeed),
    embedding: DenseMatrix,
    trace: Vec<f64>,
    start: Instant,
) -> Result<EmbeddingResult> {
    if !embedding.is_finite() {
        return Err(Error::Divergence {
            epoch: trace.len(),
            loss: f64::NAN,
        });
    }
    let mut r = EmbeddingResult::new(method, cfg, cfg.seed(), embedding);
    r.loss_trace = trace;
    r.wall_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

pub(super) trait HasSeed {
    fn seed(&self) -> u64;
}

impl HasSeed for GaeConfig {
    fn seed(&self) -> u64 {
        self.seed
    }
}
