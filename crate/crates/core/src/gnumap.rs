//! The GNUMAP trainer: a GCN encoder, a whitening layer, and a UMAP-style
//! cross-entropy between the observed graph and low-dimensional
//! connection probabilities.

use std::rc::Rc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::GraphDataset;
use crate::diffengine::{dbn_forward, store_grads, AdamState, GcnEncoder, InitScheme, Pairs, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{negative_edge_sample, normalized_adjacency, SparseGraph};
use crate::numerics::{sq_dist, DenseMatrix, Rng};

/// Embedding coordinates plus how they were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub embedding: DenseMatrix,
    pub method: String,
    pub config_digest: String,
    pub seed: u64,
    pub loss_trace: Vec<f64>,
    pub wall_seconds: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl EmbeddingResult {
    pub fn new(method: &str, config: &impl Serialize, seed: u64, embedding: DenseMatrix) -> Self {
        Self {
            embedding,
            method: method.to_string(),
            config_digest: digest(config),
            seed,
            loss_trace: vec![],
            wall_seconds: 0.0,
            warnings: vec![],
        }
    }
}

/// Hex SHA-256 of a value's JSON form.
pub fn digest(value: &impl Serialize) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    let hash = Sha256::digest(&json);
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnumapConfig {
    pub alpha: f64,
    pub beta: f64,
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    pub out_dim: usize,
    /// Apply the whitening layer after the encoder.
    pub use_dbn: bool,
    pub dbn_eps: f64,
    pub dbn_iters: usize,
    pub ce_eps: f64,
    pub init_scheme: InitScheme,
    pub seed: u64,
}

pub const UMAP_ALPHA: f64 = 1.57;
pub const UMAP_BETA: f64 = 0.89;

impl Default for GnumapConfig {
    fn default() -> Self {
        Self {
            alpha: UMAP_ALPHA,
            beta: UMAP_BETA,
            epochs: 400,
            lr: 0.01,
            hidden: 64,
            out_dim: 2,
            use_dbn: true,
            dbn_eps: 1e-5,
            dbn_iters: 8,
            ce_eps: 1e-7,
            init_scheme: InitScheme::XavierUniform,
            seed: 0,
        }
    }
}

impl GnumapConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = vec![];
        if !(self.alpha > 0.0) {
            bad.push(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta > 0.0) {
            bad.push(format!("beta must be positive, got {}", self.beta));
        }
        if self.epochs == 0 {
            bad.push("epochs must be at least 1".into());
        }
        if self.out_dim == 0 || self.hidden == 0 {
            bad.push("hidden and out_dim must be at least 1".into());
        }
        if !(self.ce_eps > 0.0 && self.ce_eps < 0.5) {
            bad.push(format!("ce_eps must lie in (0, 0.5), got {}", self.ce_eps));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

/// `q = 1 / (1 + α·d^{2β})`.
pub fn low_dim_probability(d: f64, alpha: f64, beta: f64) -> f64 {
    1.0 / (1.0 + alpha * d.powf(2.0 * beta))
}

/// `−Σ [p·log q + (1−p)·log(1−q)]` with `q` clamped to `[eps, 1−eps]`.
pub fn cross_entropy_loss(p: &[f64], q: &[f64], eps: f64) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&p, &q)| {
            let q = q.clamp(eps, 1.0 - eps);
            -(p * q.ln() + (1.0 - p) * (1.0 - q).ln())
        })
        .sum()
}

/// Records the summed pair cross-entropy between target weights `p` and the
/// low-dimensional probabilities of the embedding `y` on `pairs`.
pub fn pair_cross_entropy(
    tape: &mut Tape,
    y: Var,
    pairs: Pairs,
    p: Rc<DenseMatrix>,
    alpha: f64,
    beta: f64,
    eps: f64,
) -> Result<Var> {
    let q = pair_probability(tape, y, pairs, alpha, beta)?;
    let q = tape.clamp(q, eps, 1.0 - eps);
    let log_q = tape.log(q);
    let neg_q = tape.scale(q, -1.0);
    let one_minus_q = tape.add_scalar(neg_q, 1.0);
    let log_1mq = tape.log(one_minus_q);
    let pv = tape.constant_rc(p.clone());
    let p_comp = tape.constant(p.map(|v| 1.0 - v));
    let a = tape.mul(pv, log_q)?;
    let b = tape.mul(p_comp, log_1mq)?;
    let s = tape.add(a, b)?;
    let total = tape.sum(s);
    Ok(tape.scale(total, -1.0))
}

/// `1 / (1 + α·(d²)^β)` for each listed pair, as an m×1 column.
pub fn pair_probability(tape: &mut Tape, y: Var, pairs: Pairs, alpha: f64, beta: f64) -> Result<Var> {
    let sq = tape.pair_sq_dist(y, pairs)?;
    let pw = tape.pow(sq, beta);
    let a = tape.scale(pw, alpha);
    let den = tape.add_scalar(a, 1.0);
    Ok(tape.pow(den, -1.0))
}

/// Both orientations of every edge, with their weights.
pub(crate) fn positive_pairs(g: &SparseGraph) -> (Vec<(usize, usize)>, Vec<f64>) {
    let mut pairs = Vec::with_capacity(2 * g.num_edges());
    let mut w = Vec::with_capacity(2 * g.num_edges());
    for i in 0..g.n() {
        for (&j, &wij) in g.neighbors(i).iter().zip(g.neighbor_weights(i)) {
            pairs.push((i, j));
            w.push(wij);
        }
    }
    (pairs, w)
}

fn encode(tape: &mut Tape, enc: &GcnEncoder, x: &Rc<DenseMatrix>, cfg: &GnumapConfig) -> Result<(Var, Vec<Var>)> {
    let xv = tape.constant_rc(x.clone());
    let (z, vars) = enc.forward(tape, xv)?;
    let y = if cfg.use_dbn {
        dbn_forward(tape, z, cfg.dbn_eps, cfg.dbn_iters)?
    } else {
        z
    };
    Ok((y, vars))
}

/// Trains GNUMAP on a dataset and returns the final embedding.
///
/// Every epoch draws as many fresh negative pairs as there are positive
/// (ordered) pairs, and the loss is summed over all of them.
pub fn gnumap_train(ds: &GraphDataset, cfg: &GnumapConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    ds.graph.ensure_connected()?;
    let start = Instant::now();
    let n = ds.n();
    let mut rng = Rng::derive(cfg.seed, 0);
    let mut neg_rng = Rng::derive(cfg.seed, 1);
    let adj = Rc::new(normalized_adjacency(&ds.graph, true)?);
    let x = Rc::new(ds.features.clone());
    let mut enc = GcnEncoder::new(adj, ds.features.cols(), cfg.hidden, cfg.out_dim, cfg.init_scheme, &mut rng);
    let mut adam = AdamState::new(&enc.layers, cfg.lr);
    let (pos, pos_w) = positive_pairs(&ds.graph);
    let n_pos = pos.len();

    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let neg = negative_edge_sample(&ds.graph, n_pos, &mut neg_rng)?;
        let mut pairs = pos.clone();
        pairs.extend(neg);
        let mut p = pos_w.clone();
        p.resize(pairs.len(), 0.0);
        let p = Rc::new(DenseMatrix::new(p.len(), 1, p)?);

        let mut tape = Tape::new();
        let (y, vars) = encode(&mut tape, &enc, &x, cfg)?;
        let loss = pair_cross_entropy(&mut tape, y, Rc::new(pairs), p, cfg.alpha, cfg.beta, cfg.ce_eps)?;
        let value = tape.scalar(loss);
        if !value.is_finite() {
            return Err(Error::Divergence { epoch, loss: value });
        }
        trace.push(value);
        let grads = tape.backward(loss)?;
        store_grads(&tape, &grads, &vars, &mut enc.layers);
        adam.step(&mut enc.layers);
    }

    let mut tape = Tape::new();
    let (y, _) = encode(&mut tape, &enc, &x, cfg)?;
    let embedding = tape.value(y).clone();
    if !embedding.is_finite() {
        return Err(Error::Divergence {
            epoch: cfg.epochs,
            loss: f64::NAN,
        });
    }
    debug_assert_eq!(embedding.rows(), n);
    let mut result = EmbeddingResult::new("gnumap", cfg, cfg.seed, embedding);
    result.loss_trace = trace;
    result.wall_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Loss of a fixed embedding on a fixed pair list; targets are the graph's
/// edge weights (0 for non-edges).
pub fn gnumap_loss_at(embedding: &DenseMatrix, graph: &SparseGraph, pairs: &[(usize, usize)], cfg: &GnumapConfig) -> f64 {
    let mut p = Vec::with_capacity(pairs.len());
    let mut q = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        p.push(graph.weight(i, j).unwrap_or(0.0));
        let d = sq_dist(embedding.row(i), embedding.row(j)).sqrt();
        q.push(low_dim_probability(d, cfg.alpha, cfg.beta));
    }
    cross_entropy_loss(&p, &q, cfg.ce_eps)
}
