use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnumap::EmbeddingResult;
use crate::graph::{all_pairs_shortest_paths, fix_sign, knn_graph, knn_indices, spectral_embedding, EdgeLength, SparseGraph};
use crate::numerics::{solve_linear, sq_dist, symmetric_eig, DenseMatrix};

fn timed(method: &str, cfg: &impl Serialize, start: Instant, emb: DenseMatrix) -> EmbeddingResult {
    let mut r = EmbeddingResult::new(method, cfg, 0, emb);
    r.wall_seconds = start.elapsed().as_secs_f64();
    r
}

/// Principal axes of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub mean: Vec<f64>,
    /// Per-column divisor applied after centering (1 when unscaled).
    pub scale: Vec<f64>,
    /// p×q loadings, one unit column per component.
    pub components: DenseMatrix,
    /// Eigenvalues of the (scaled) scatter matrix `XᵀX`, descending.
    pub eigenvalues: Vec<f64>,
}

impl PcaFit {
    /// `((x − mean) / scale) · components`.
    pub fn transform(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let z = DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| (x[(i, j)] - self.mean[j]) / self.scale[j]);
        z.matmul(&self.components)
    }
}

/// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// Fits `q` principal axes. With `standardize`, each column is divided by
/// its standard deviation (constant columns are only centered).
pub fn pca_fit(x: &DenseMatrix, q: usize, standardize: bool) -> Result<PcaFit> {
    let (n, p) = x.shape();
    if q == 0 || q > n.min(p) {
        return Err(Error::contract(format!("q = {q} outside 1..={}", n.min(p))));
    }
    let mean = x.column_means();
    let c = x.centered();
    let scale: Vec<f64> = (0..p)
        .map(|j| {
            let sd = (c.column(j).iter().map(|v| v * v).sum::<f64>() / (n as f64 - 1.0).max(1.0)).sqrt();
            if standardize && sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let z = DenseMatrix::from_fn(n, p, |i, j| c[(i, j)] / scale[j]);
    let eig = symmetric_eig(&z.tr_matmul(&z)?)?;
    let mut components = DenseMatrix::zeros(p, q);
    let mut eigenvalues = Vec::with_capacity(q);
    for k in 0..q {
        let idx = p - 1 - k;
        let mut v = eig.vectors.column(idx);
        fix_sign(&mut v);
        components.set_column(k, &v);
        eigenvalues.push(eig.values[idx].max(0.0));
    }
    Ok(PcaFit {
        mean,
        scale,
        components,
        eigenvalues,
    })
}

/// Rank of the centered data, counting eigenvalues of `XᵀX` above
/// `1e-10·λ_max`.
pub fn numerical_rank(x: &DenseMatrix) -> Result<usize> {
    let c = x.centered();
    let eig = symmetric_eig(&c.tr_matmul(&c)?)?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(eig.values.iter().filter(|&&v| v > RANK_TOL * top).count())
}

/// Projects onto the top `q` principal components without rescaling the
/// columns, so at full rank the result is a rotation of the centered data.
/// Asking for more components than the rank is an error.
pub fn principal_components(x: &DenseMatrix, q: usize) -> Result<DenseMatrix> {
    let rank = numerical_rank(x)?;
    if q > rank {
        return Err(Error::contract(format!("{q} components requested but the data has rank {rank}")));
    }
    pca_fit(x, q, false)?.transform(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    pub out_dim: usize,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self { out_dim: 2 }
    }
}

/// Standardized PCA scores `U_q Σ_q`.
pub fn pca(x: &DenseMatrix, cfg: &PcaConfig) -> Result<EmbeddingResult> {
    let start = Instant::now();
    let scores = pca_fit(x, cfg.out_dim, true)?.transform(x)?;
    Ok(timed("pca", cfg, start, scores))
}

/// Classical MDS of a distance matrix: top-`q` eigenvectors of
/// `−½ J D² J` scaled by `√λ`, negative eigenvalues clamped to zero.
pub fn classical_mds(dist: &DenseMatrix, q: usize) -> Result<DenseMatrix> {
    let n = dist.rows();
    if !dist.is_square() || q == 0 || q > n {
        return Err(Error::contract(format!("MDS of {:?} into {q} dimensions", dist.shape())));
    }
    let sq = dist.map(|d| d * d);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DenseMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = symmetric_eig(&b)?;
    let mut out = DenseMatrix::zeros(n, q);
    for k in 0..q {
        let idx = n - 1 - k;
        let s = eig.values[idx].max(0.0).sqrt();
        let mut v: Vec<f64> = eig.vectors.column(idx).iter().map(|x| x * s).collect();
        fix_sign(&mut v);
        out.set_column(k, &v);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsomapConfig {
    pub out_dim: usize,
    pub k: usize,
}

impl Default for IsomapConfig {
    fn default() -> Self {
        Self { out_dim: 2, k: 12 }
    }
}

/// Isomap: Euclidean-length geodesics over the k-NN graph, then MDS.
pub fn isomap(points: &DenseMatrix, cfg: &IsomapConfig) -> Result<EmbeddingResult> {
    let start = Instant::now();
    let g = knn_graph(points, cfg.k)?;
    g.ensure_connected()?;
    let geo = all_pairs_shortest_paths(&g, EdgeLength::Euclidean(points));
    let emb = classical_mds(&geo.dist, cfg.out_dim)?;
    Ok(timed("isomap", cfg, start, emb))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LleConfig {
    pub out_dim: usize,
    pub k: usize,
    /// Regularizer `ridge·trace(G)/k` added to each local Gram matrix.
    pub ridge: f64,
}

impl Default for LleConfig {
    fn default() -> Self {
        Self {
            out_dim: 2,
            k: 12,
            ridge: 1e-3,
        }
    }
}

/// Reconstruction weights of `x` from `neighbors`: minimizes
/// `‖x − Σ wⱼ nⱼ‖²` subject to `Σ wⱼ = 1`.
pub fn lle_weights(x: &[f64], neighbors: &[&[f64]], ridge: f64) -> Result<Vec<f64>> {
    let k = neighbors.len();
    let z = DenseMatrix::from_fn(k, x.len(), |a, c| neighbors[a][c] - x[c]);
    let mut g = z.matmul_tr(&z)?;
    let tr = g.trace();
    let reg = if tr > 0.0 { ridge * tr / k as f64 } else { ridge };
    for a in 0..k {
        g[(a, a)] += reg;
    }
    let w = solve_linear(&g, &DenseMatrix::filled(k, 1, 1.0))?;
    let total: f64 = w.data().iter().sum();
    if total.abs() < 1e-300 || !total.is_finite() {
        return Err(Error::Singular("local Gram matrix is singular".into()));
    }
    Ok(w.data().iter().map(|v| v / total).collect())
}

/// Locally linear embedding: eigenvectors 2..q+1 (ascending) of
/// `(I − W)ᵀ(I − W)`.
pub fn lle(points: &DenseMatrix, cfg: &LleConfig) -> Result<EmbeddingResult> {
    let start = Instant::now();
    let n = points.rows();
    if cfg.k < cfg.out_dim + 1 || cfg.k >= n {
        return Err(Error::contract(format!(
            "k = {} must satisfy out_dim + 1 <= k < n = {n}",
            cfg.k
        )));
    }
    let nn = knn_indices(points, cfg.k)?;
    let mut m = DenseMatrix::identity(n);
    for (i, near) in nn.iter().enumerate() {
        let rows: Vec<&[f64]> = near.iter().map(|&j| points.row(j)).collect();
        let w = lle_weights(points.row(i), &rows, cfg.ridge)?;
        for (&j, &wj) in near.iter().zip(&w) {
            m[(i, j)] -= wj;
        }
    }
    let cost = m.tr_matmul(&m)?;
    let eig = symmetric_eig(&cost)?;
    let mut out = DenseMatrix::zeros(n, cfg.out_dim);
    for c in 0..cfg.out_dim {
        let mut v = eig.vectors.column(c + 1);
        fix_sign(&mut v);
        out.set_column(c, &v);
    }
    Ok(timed("lle", cfg, start, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaplacianConfig {
    pub out_dim: usize,
    /// Heat-kernel width; `None` keeps the graph's own weights.
    pub heat_t: Option<f64>,
}

impl Default for LaplacianConfig {
    fn default() -> Self {
        Self {
            out_dim: 2,
            heat_t: None,
        }
    }
}

/// Laplacian eigenmap of a graph, optionally reweighting its edges by
/// `exp(−‖xᵢ − xⱼ‖²/t)` using `coords`.
pub fn laplacian_eigenmap(
    g: &SparseGraph,
    coords: Option<&DenseMatrix>,
    cfg: &LaplacianConfig,
) -> Result<EmbeddingResult> {
    let start = Instant::now();
    let graph = match (cfg.heat_t, coords) {
        (None, _) => g.clone(),
        (Some(t), Some(x)) => {
            if !(t > 0.0) {
                return Err(Error::contract(format!("heat_t must be positive, got {t}")));
            }
            g.map_weights(|i, j, _| (-sq_dist(x.row(i), x.row(j)) / t).exp())?
        }
        (Some(_), None) => return Err(Error::contract("heat kernel needs coordinates")),
    };
    let emb = spectral_embedding(&graph, cfg.out_dim)?;
    Ok(timed("laplacian_eigenmap", cfg, start, emb))
}
