use std::collections::BTreeMap;
use std::rc::Rc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diffengine::{store_grads, AdamState, Parameter, Tape, Var};
use crate::error::{Error, Result};
use crate::gnumap::{pair_cross_entropy, pair_probability, positive_pairs, EmbeddingResult, UMAP_ALPHA, UMAP_BETA};
use crate::graph::{knn_indices, negative_edge_sample, spectral_embedding, SparseGraph};
use super::spectral::{numerical_rank, principal_components};
use crate::metrics::{graph_local_radius, RADIUS_FLOOR};
use crate::numerics::{sq_dist, DenseMatrix, Rng};

/// UMAP's fuzzy neighborhood graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph {
    /// Distance to the nearest neighbor.
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Symmetric fuzzy weights in `(0, 1]`.
    pub p: SparseGraph,
    /// Rows whose ties at ρ already reach the target mass, so no σ > 0
    /// solves the equation; they use the σ → 0 limit with a floored σ.
    pub degenerate_rows: Vec<usize>,
}

pub const SIGMA_BISECTIONS: usize = 64;
pub const SIGMA_TOLERANCE: f64 = 1e-6;
/// Floor for σ on degenerate rows, as a fraction of the row's mean
/// neighbor distance (of the global mean when the row's is zero).
pub const MIN_SIGMA_SCALE: f64 = 1e-3;
/// Neighbor distances below this fraction of the global mean neighbor
/// distance count as zero.
pub const COINCIDENT_SCALE: f64 = 1e-12;

fn kernel_mass(dists: &[f64], rho: f64, sigma: f64) -> f64 {
    dists.iter().map(|&d| (-(d - rho).max(0.0) / sigma).exp()).sum()
}

/// Solves `Σⱼ exp(−max(0, dⱼ − ρ)/σ) = target` for σ by bisection.
/// Returns `None` when no σ gets within tolerance (e.g. all distances tie).
pub fn smooth_knn_sigma(dists: &[f64], rho: f64, target: f64) -> Option<f64> {
    let mut hi = 1.0;
    let mut grown = 0;
    while kernel_mass(dists, rho, hi) < target {
        hi *= 2.0;
        grown += 1;
        if grown > 1100 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..SIGMA_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if kernel_mass(dists, rho, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    (sigma > 0.0 && (kernel_mass(dists, rho, sigma) - target).abs() <= SIGMA_TOLERANCE).then_some(sigma)
}

/// Probabilistic-sum symmetrization `a + b − ab`.
pub fn fuzzy_union(a: f64, b: f64) -> f64 {
    a + b - a * b
}

/// Builds the fuzzy graph over the `k` nearest neighbors of each point.
pub fn fuzzy_simplicial_set(points: &DenseMatrix, k: usize) -> Result<FuzzyGraph> {
    let n = points.rows();
    if k < 2 {
        return Err(Error::contract("n_neighbors must be at least 2"));
    }
    let knn = knn_indices(points, k)?;
    let target = (k as f64).log2();
    let dists: Vec<Vec<f64>> = knn
        .iter()
        .enumerate()
        .map(|(i, nbrs)| nbrs.iter().map(|&j| sq_dist(points.row(i), points.row(j)).sqrt()).collect())
        .collect();
    let scale = dists.iter().flatten().sum::<f64>() / (n * k) as f64;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Calibration { row: 0 });
    }
    // distances at rounding-noise level are coincident points
    let tie = COINCIDENT_SCALE * scale;
    let mut rho = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut directed = vec![Vec::with_capacity(k); n];
    let mut degenerate_rows = Vec::new();
    for (i, (nbrs, raw)) in knn.iter().zip(&dists).enumerate() {
        let d: Vec<f64> = raw.iter().map(|&x| if x <= tie { 0.0 } else { x }).collect();
        let r = d.iter().copied().fold(f64::INFINITY, f64::min);
        let s = match smooth_knn_sigma(&d, r, target) {
            Some(s) => s,
            None => {
                // ties at ρ carry the whole target mass: take the σ → 0 limit
                let ties = d.iter().filter(|&&x| x - r <= tie).count();
                if (ties as f64) < target {
                    return Err(Error::Calibration { row: i });
                }
                degenerate_rows.push(i);
                let mean = d.iter().sum::<f64>() / k as f64;
                MIN_SIGMA_SCALE * if mean > 0.0 { mean } else { scale }
            }
        };
        for (&j, &dj) in nbrs.iter().zip(&d) {
            directed[i].push((j, (-(dj - r).max(0.0) / s).exp()));
        }
        rho.push(r);
        sigma.push(s);
    }
    let mut pairs: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for (i, row) in directed.iter().enumerate() {
        for &(j, w) in row {
            let e = pairs.entry((i.min(j), i.max(j))).or_default();
            if i < j {
                e.0 = w;
            } else {
                e.1 = w;
            }
        }
    }
    let edges: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .map(|((i, j), (a, b))| (i, j, fuzzy_union(a, b)))
        .filter(|e| e.2 > 0.0)
        .collect();
    Ok(FuzzyGraph {
        rho,
        sigma,
        p: SparseGraph::from_edges(n, &edges)?,
        degenerate_rows,
    })
}

const AB_GRID: usize = 300;

/// Curve parameters `(a, b)` of `1/(1 + a·d^{2b})` for the given spread and
/// minimum distance. The default pair (1, 0.1) returns the standard
/// constants; anything else is a Levenberg–Marquardt least-squares fit on a
/// 300-point grid over `[0, 3·spread]` against `1` for `d ≤ min_dist` and
/// `exp(−(d − min_dist)/spread)` beyond.
pub fn fit_ab(spread: f64, min_dist: f64) -> Result<(f64, f64)> {
    if !(spread > 0.0 && min_dist >= 0.0 && spread.is_finite() && min_dist.is_finite()) {
        return Err(Error::contract(format!("spread {spread}, min_dist {min_dist}")));
    }
    if spread == 1.0 && min_dist == 0.1 {
        return Ok((UMAP_ALPHA, UMAP_BETA));
    }
    Ok(least_squares_ab(spread, min_dist))
}

pub(crate) fn least_squares_ab(spread: f64, min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..AB_GRID).map(|i| 3.0 * spread * i as f64 / (AB_GRID - 1) as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| if x <= min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();
    let sse = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| (1.0 / (1.0 + a * x.powf(2.0 * b)) - y).powi(2))
            .sum()
    };
    let (mut a, mut b) = (1.0, 1.0);
    let mut damping = 1e-3;
    let mut cost = sse(a, b);
    for _ in 0..500 {
        // normal equations JᵀJ δ = −Jᵀr
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            let xp = if x > 0.0 { x.powf(2.0 * b) } else { 0.0 };
            let den = 1.0 + a * xp;
            let r = 1.0 / den - y;
            let da = -xp / (den * den);
            let db = if x > 0.0 { -a * xp * 2.0 * x.ln() / (den * den) } else { 0.0 };
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        while damping < 1e12 {
            let (m00, m11) = (jaa * (1.0 + damping), jbb * (1.0 + damping));
            let det = m00 * m11 - jab * jab;
            if det.abs() < 1e-300 {
                damping *= 10.0;
                continue;
            }
            let step_a = -(m11 * ga - jab * gb) / det;
            let step_b = -(m00 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            let nc = if na > 0.0 && nb > 0.0 { sse(na, nb) } else { f64::INFINITY };
            if nc < cost {
                let rel = (cost - nc) / cost.max(1e-300);
                a = na;
                b = nb;
                cost = nc;
                damping = (damping * 0.3).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UmapConfig {
    pub out_dim: usize,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub epochs: usize,
    pub lr: f64,
    pub ce_eps: f64,
    pub seed: u64,
}

impl Default for UmapConfig {
    fn default() -> Self {
        Self {
            out_dim: 2,
            n_neighbors: 15,
            min_dist: 0.1,
            spread: 1.0,
            epochs: 500,
            lr: 0.1,
            ce_eps: 1e-7,
            seed: 0,
        }
    }
}

impl UmapConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.out_dim == 0 {
            bad.push("out_dim must be at least 1".to_string());
        }
        if self.n_neighbors < 2 {
            bad.push("n_neighbors must be at least 2".to_string());
        }
        if self.epochs == 0 {
            bad.push("epochs must be at least 1".to_string());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            bad.push(format!("lr must be positive, got {}", self.lr));
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensmapConfig {
    pub lambda: f64,
    pub umap: UmapConfig,
}

impl Default for DensmapConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_DENS_LAMBDA,
            umap: UmapConfig::default(),
        }
    }
}

/// Default weight of the density term. The cross-entropy is a sum over a
/// few thousand pairs while the correlation lies in [−1, 1], so the
/// weight is on the scale of the positive-pair count.
pub const DEFAULT_DENS_LAMBDA: f64 = 1000.0;

/// Spectral layout of the fuzzy graph. A disconnected graph falls back to
/// the leading principal components of the input (random uniform if the
/// input has too low a rank). Scaled so the largest magnitude is 10.
fn initial_layout(
    g: &SparseGraph,
    points: &DenseMatrix,
    q: usize,
    rng: &mut Rng,
    warnings: &mut Vec<String>,
) -> Result<DenseMatrix> {
    let n = g.n();
    let y = if g.is_connected() && q < n {
        spectral_embedding(g, q)?
    } else if q <= numerical_rank(points)? {
        warnings.push("fuzzy graph is disconnected; initialized from principal components".into());
        principal_components(points, q)?
    } else {
        warnings.push("fuzzy graph is disconnected; initialized at random".into());
        DenseMatrix::from_fn(n, q, |_, _| 2.0 * rng.uniform() - 1.0)
    };
    let m = y.max_abs();
    Ok(if m > 0.0 { y.scale(10.0 / m) } else { y })
}

/// Constant side of the density term: centered log radii in input space.
pub(crate) fn centered_log(r: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = r.iter().map(|&v| v.max(RADIUS_FLOOR).ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    logs.into_iter().map(|v| v - mean).collect()
}

/// Records `Corr(log r_p, log r_q)` where `r_q(i)` is the `q`-weighted mean
/// squared embedding distance over the directed pairs `pairs` (grouped by
/// source `pairs[k].0`). `log_rp` must already be centered. Returns the
/// correlation var and how many embedding radii fell below the floor.
pub fn density_corr_term(
    tape: &mut Tape,
    y: Var,
    pairs: Rc<Vec<(usize, usize)>>,
    log_rp: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<(Var, usize)> {
    let n = tape.value(y).rows();
    if log_rp.len() != n {
        return Err(Error::shape(format!("{} radii for {n} points", log_rp.len())));
    }
    let src = Rc::new(pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let q = pair_probability(tape, y, pairs.clone(), alpha, beta)?;
    let d2 = tape.pair_sq_dist(y, pairs)?;
    let qd = tape.mul(q, d2)?;
    let num = tape.segment_sum(qd, src.clone(), n)?;
    let den = tape.segment_sum(q, src, n)?;
    let inv = tape.pow(den, -1.0);
    let r = tape.mul(num, inv)?;
    let clamped = tape.value(r).data().iter().filter(|&&v| v < RADIUS_FLOOR).count();
    let r = tape.clamp(r, RADIUS_FLOOR, f64::INFINITY);
    let lr = tape.log(r);
    let mean = tape.col_mean(lr);
    let lc = tape.sub_row(lr, mean)?;
    let rp_norm = log_rp.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rp = tape.constant(DenseMatrix::new(n, 1, log_rp.to_vec())?);
    let cross = tape.mul(rp, lc)?;
    let cross = tape.sum(cross);
    let sq = tape.mul(lc, lc)?;
    let ss = tape.sum(sq);
    let inv_norm = tape.pow(ss, -0.5);
    let corr = tape.mul(cross, inv_norm)?;
    Ok((tape.scale(corr, 1.0 / rp_norm), clamped))
}

/// UMAP on a point cloud: fuzzy graph, spectral initialization, then Adam
/// on the coordinates against the summed pair cross-entropy with fresh
/// negatives every epoch.
pub fn umap_euclidean(points: &DenseMatrix, cfg: &UmapConfig) -> Result<EmbeddingResult> {
    optimize(points, cfg, 0.0, "umap", cfg)
}

/// DensMAP: the UMAP objective minus `λ·Corr(log r_p, log r_q)`. With
/// `λ = 0` the density term is never recorded, so the run is identical to
/// [`umap_euclidean`].
pub fn densmap(points: &DenseMatrix, cfg: &DensmapConfig) -> Result<EmbeddingResult> {
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(Error::Validation(vec![format!("lambda must be non-negative, got {}", cfg.lambda)]));
    }
    optimize(points, &cfg.umap, cfg.lambda, "densmap", cfg)
}

fn optimize(points: &DenseMatrix, cfg: &UmapConfig, lambda: f64, method: &str, full: &impl Serialize) -> Result<EmbeddingResult> {
    cfg.validate()?;
    let start = Instant::now();
    let n = points.rows();
    if cfg.n_neighbors >= n {
        return Err(Error::contract(format!("n_neighbors = {} must be below n = {n}", cfg.n_neighbors)));
    }
    let (a, b) = fit_ab(cfg.spread, cfg.min_dist)?;
    let fuzzy = fuzzy_simplicial_set(points, cfg.n_neighbors)?;
    let g = &fuzzy.p;
    let mut warnings = Vec::new();
    if !fuzzy.degenerate_rows.is_empty() {
        warnings.push(format!(
            "{} rows have tied nearest neighbors covering the bandwidth target; used the limiting kernel",
            fuzzy.degenerate_rows.len()
        ));
    }
    let mut init_rng = Rng::derive(cfg.seed, 0);
    let mut neg_rng = Rng::derive(cfg.seed, 1);
    let y0 = initial_layout(g, points, cfg.out_dim, &mut init_rng, &mut warnings)?;
    let mut params = vec![Parameter::new("y", y0)];
    let mut adam = AdamState::new(&params, cfg.lr);
    let (pos, pos_w) = positive_pairs(g);
    let n_pos = pos.len();
    let pos_rc = Rc::new(pos.clone());
    let log_rp = if lambda > 0.0 {
        centered_log(&graph_local_radius(g, points, |_, _, w| w)?)
    } else {
        Vec::new()
    };

    let mut clamped_total = 0;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let neg = negative_edge_sample(g, n_pos, &mut neg_rng)?;
        let mut pairs = pos.clone();
        pairs.extend(neg);
        let mut p = pos_w.clone();
        p.resize(pairs.len(), 0.0);
        let p = Rc::new(DenseMatrix::new(p.len(), 1, p)?);

        let mut tape = Tape::new();
        let y = tape.input(params[0].value.clone());
        let mut loss = pair_cross_entropy(&mut tape, y, Rc::new(pairs), p, a, b, cfg.ce_eps)?;
        if lambda > 0.0 {
            let (corr, clamped) = density_corr_term(&mut tape, y, pos_rc.clone(), &log_rp, a, b)?;
            clamped_total += clamped;
            let weighted = tape.scale(corr, -lambda);
            loss = tape.add(loss, weighted)?;
        }
        let value = tape.scalar(loss);
        if !value.is_finite() {
            return Err(Error::Divergence { epoch, loss: value });
        }
        trace.push(value);
        let grads = tape.backward(loss)?;
        store_grads(&tape, &grads, &[y], &mut params);
        adam.step(&mut params);
    }
    if clamped_total > 0 {
        warnings.push(format!("{clamped_total} embedding radii clamped to {RADIUS_FLOOR:e}"));
    }
    let embedding = params.pop().expect("one parameter").value;
    if !embedding.is_finite() {
        return Err(Error::Divergence {
            epoch: cfg.epochs,
            loss: f64::NAN,
        });
    }
    let mut r = EmbeddingResult::new(method, full, cfg.seed, embedding);
    r.loss_trace = trace;
    r.warnings = warnings;
    r.wall_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}
