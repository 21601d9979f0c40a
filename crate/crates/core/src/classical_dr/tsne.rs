use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnumap::EmbeddingResult;
use crate::numerics::{pairwise_sq_distances, sq_dist, DenseMatrix, Rng};

/// Per-point Gaussian bandwidths and the conditional affinities they give.
#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityCalibration {
    pub sigmas: Vec<f64>,
    /// Row-stochastic `p_{j|i}` with a zero diagonal.
    pub conditional: DenseMatrix,
}

const MAX_BISECTIONS: usize = 200;

/// Perplexity `2^H` of the row `exp(−β dⱼ)` (normalized), and the row.
fn row_perplexity(d: &[f64], beta: f64, out: &mut [f64]) -> f64 {
    let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (o, &dj) in out.iter_mut().zip(d) {
        *o = (-(dj - dmin) * beta).exp();
        total += *o;
    }
    let mut h = 0.0;
    for o in out.iter_mut() {
        *o /= total;
        if *o > 0.0 {
            h -= *o * o.log2();
        }
    }
    h.exp2()
}

/// Binary search, row by row, for the bandwidth `σᵢ` whose conditional
/// distribution `p_{j|i} ∝ exp(−dᵢⱼ²/2σᵢ²)` has the target perplexity.
///
/// Rows whose distances are all equal are uniform for every σ; they are
/// returned as such (perplexity `n − 1`).
pub fn calibrate_perplexity(sq_dists: &DenseMatrix, perplexity: f64) -> Result<PerplexityCalibration> {
    let n = sq_dists.rows();
    if !(perplexity > 1.0 && perplexity < (n as f64 - 1.0)) {
        return Err(Error::contract(format!(
            "perplexity {perplexity} outside (1, {})",
            n as f64 - 1.0
        )));
    }
    let mut conditional = DenseMatrix::zeros(n, n);
    let mut sigmas = Vec::with_capacity(n);
    let mut d = vec![0.0; n - 1];
    let mut row = vec![0.0; n - 1];
    for i in 0..n {
        let mut k = 0;
        for j in (0..n).filter(|&j| j != i) {
            d[k] = sq_dists[(i, j)];
            k += 1;
        }
        let spread = d.iter().copied().fold(f64::NEG_INFINITY, f64::max) - d.iter().copied().fold(f64::INFINITY, f64::min);
        let beta = if spread == 0.0 {
            row_perplexity(&d, 1.0, &mut row);
            1.0
        } else {
            // perplexity falls as β grows; bracket in log β then bisect
            let (mut lo, mut hi) = (-60.0f64, 60.0f64);
            if row_perplexity(&d, hi.exp() / spread, &mut row) > perplexity {
                return Err(Error::Calibration { row: i });
            }
            let mut mid = 0.0;
            for _ in 0..MAX_BISECTIONS {
                mid = 0.5 * (lo + hi);
                let p = row_perplexity(&d, mid.exp() / spread, &mut row);
                if (p - perplexity).abs() <= 1e-10 * perplexity {
                    break;
                }
                if p > perplexity {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let beta = mid.exp() / spread;
            let achieved = row_perplexity(&d, beta, &mut row);
            if (achieved - perplexity).abs() > 1e-4 {
                return Err(Error::Calibration { row: i });
            }
            beta
        };
        sigmas.push((0.5 / beta).sqrt());
        let mut k = 0;
        for j in (0..n).filter(|&j| j != i) {
            conditional[(i, j)] = row[k];
            k += 1;
        }
    }
    Ok(PerplexityCalibration { sigmas, conditional })
}

/// Symmetric joint affinities `(p_{j|i} + p_{i|j}) / 2n`.
pub fn joint_probabilities(cal: &PerplexityCalibration) -> DenseMatrix {
    let c = &cal.conditional;
    let n = c.rows() as f64;
    DenseMatrix::from_fn(c.rows(), c.cols(), |i, j| (c[(i, j)] + c[(j, i)]) / (2.0 * n))
}

/// `KL(P‖Q)` with Student-t `Q`, and its gradient with `P` multiplied by
/// `exaggeration` (the gradient is exact for `exaggeration = 1`).
pub fn tsne_kl_gradient(p: &DenseMatrix, y: &DenseMatrix, exaggeration: f64) -> (f64, DenseMatrix) {
    let n = y.rows();
    let w = DenseMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 / (1.0 + sq_dist(y.row(i), y.row(j))) });
    let z = w.sum();
    let mut kl = 0.0;
    let mut grad = DenseMatrix::zeros(n, y.cols());
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[(i, j)];
            let q = w[(i, j)] / z;
            if pij > 0.0 {
                kl += pij * (pij / q).ln();
            }
            let f = 4.0 * (exaggeration * pij - q) * w[(i, j)];
            for c in 0..y.cols() {
                grad[(i, c)] += f * (y[(i, c)] - y[(j, c)]);
            }
        }
    }
    (kl, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneConfig {
    pub out_dim: usize,
    pub perplexity: f64,
    pub iters: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            out_dim: 2,
            perplexity: 30.0,
            iters: 1000,
            lr: 200.0,
            seed: 0,
        }
    }
}

pub const EARLY_EXAGGERATION: f64 = 12.0;

/// Exact t-SNE by momentum gradient descent. The first quarter of the
/// iterations uses early exaggeration and momentum 0.5, the rest 0.8.
pub fn tsne(points: &DenseMatrix, cfg: &TsneConfig) -> Result<EmbeddingResult> {
    let start = Instant::now();
    if cfg.iters == 0 || cfg.out_dim == 0 {
        return Err(Error::Validation(vec!["iters and out_dim must be at least 1".into()]));
    }
    let n = points.rows();
    let cal = calibrate_perplexity(&pairwise_sq_distances(points), cfg.perplexity)?;
    let p = joint_probabilities(&cal);
    let mut rng = Rng::derive(cfg.seed, 0);
    let mut y = DenseMatrix::from_fn(n, cfg.out_dim, |_, _| 1e-2 * rng.normal());
    let mut velocity = DenseMatrix::zeros(n, cfg.out_dim);
    let switch = cfg.iters / 4;
    let mut trace = Vec::with_capacity(cfg.iters);
    for it in 0..cfg.iters {
        let (exaggeration, momentum) = if it < switch { (EARLY_EXAGGERATION, 0.5) } else { (1.0, 0.8) };
        let (kl, grad) = tsne_kl_gradient(&p, &y, exaggeration);
        if !kl.is_finite() {
            return Err(Error::Divergence { epoch: it, loss: kl });
        }
        trace.push(kl);
        velocity = velocity.scale(momentum);
        velocity.axpy(-cfg.lr, &grad);
        y.axpy(1.0, &velocity);
    }
    let mut r = EmbeddingResult::new("tsne", cfg, cfg.seed, y);
    r.loss_trace = trace;
    r.wall_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}
