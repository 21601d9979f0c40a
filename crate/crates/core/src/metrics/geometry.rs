use crate::error::{Error, Result};
use crate::gnumap::low_dim_probability;
use crate::graph::{knn_indices, shortest_paths, EdgeLength, SparseGraph};
use crate::numerics::{solve_linear, sq_dist, DenseMatrix, Rng};

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; 0 when either side has no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
    }
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

pub const SPEARMAN_SAMPLE: usize = 1000;

/// Rank correlation between hop-count geodesics on `g` and Euclidean
/// distances in `emb`, over all pairs of up to `sample` nodes (all nodes
/// when `n ≤ sample`, else a seeded uniform subset).
pub fn geodesic_spearman(emb: &DenseMatrix, g: &SparseGraph, sample: usize, seed: u64) -> Result<f64> {
    let n = g.n();
    if emb.rows() != n {
        return Err(Error::shape(format!("{} embedding rows for {n} nodes", emb.rows())));
    }
    g.ensure_connected()?;
    let nodes: Vec<usize> = if n <= sample {
        (0..n).collect()
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        Rng::new(seed).shuffle(&mut all);
        let mut s = all[..sample].to_vec();
        s.sort_unstable();
        s
    };
    let geo = shortest_paths(g, &nodes, EdgeLength::Unit);
    let m = nodes.len();
    let mut a = Vec::with_capacity(m * (m - 1) / 2);
    let mut b = Vec::with_capacity(m * (m - 1) / 2);
    for (pi, &i) in nodes.iter().enumerate() {
        for &j in &nodes[pi + 1..] {
            a.push(geo.get(pi, j));
            b.push(sq_dist(emb.row(i), emb.row(j)).sqrt());
        }
    }
    Ok(spearman(&a, &b))
}

pub const OVERLAP_K: usize = 50;

/// Mean over nodes of `|graph neighbors ∩ k nearest in emb| / degree`.
pub fn knn_overlap(emb: &DenseMatrix, g: &SparseGraph, k: usize) -> Result<f64> {
    let n = g.n();
    if emb.rows() != n {
        return Err(Error::shape(format!("{} embedding rows for {n} nodes", emb.rows())));
    }
    let nn = knn_indices(emb, k)?;
    let mut total = 0.0;
    for (i, near) in nn.iter().enumerate() {
        let deg = g.degree(i);
        if deg == 0 {
            continue;
        }
        let hits = near.iter().filter(|&&j| g.has_edge(i, j)).count();
        total += hits as f64 / deg as f64;
    }
    Ok(total / n as f64)
}

/// `R(i) = Σ_j w_ij ‖x_i − x_j‖² / Σ_j w_ij` over the stored entries of
/// each row of `weights`.
pub fn local_radius(weights: &DenseMatrix, coords: &DenseMatrix) -> Result<Vec<f64>> {
    let n = coords.rows();
    if weights.shape() != (n, n) {
        return Err(Error::shape(format!("weights {:?} for {n} points", weights.shape())));
    }
    (0..n)
        .map(|i| {
            let mut mass = 0.0;
            let mut acc = 0.0;
            for j in 0..n {
                let w = weights[(i, j)];
                if w != 0.0 && i != j {
                    mass += w;
                    acc += w * sq_dist(coords.row(i), coords.row(j));
                }
            }
            if mass <= 0.0 {
                Err(Error::DegeneratePoint { point: i })
            } else {
                Ok(acc / mass)
            }
        })
        .collect()
}

/// Local radius over the graph's edges with per-edge weights `w(i, j)`.
pub(crate) fn graph_local_radius(
    g: &SparseGraph,
    coords: &DenseMatrix,
    w: impl Fn(usize, usize, f64) -> f64,
) -> Result<Vec<f64>> {
    (0..g.n())
        .map(|i| {
            let mut mass = 0.0;
            let mut acc = 0.0;
            for (&j, &gw) in g.neighbors(i).iter().zip(g.neighbor_weights(i)) {
                let wij = w(i, j, gw);
                mass += wij;
                acc += wij * sq_dist(coords.row(i), coords.row(j));
            }
            if mass <= 0.0 {
                Err(Error::DegeneratePoint { point: i })
            } else {
                Ok(acc / mass)
            }
        })
        .collect()
}

pub const RADIUS_FLOOR: f64 = 1e-12;

/// Outcome of [`density_correlation`]: the correlation and how many radii
/// had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityCorrelation {
    pub value: f64,
    pub clamped: usize,
}

/// Pearson correlation of log local radii in the original space (graph
/// weights) and the embedding (low-dimensional probabilities on the same
/// edges).
pub fn density_correlation(
    g: &SparseGraph,
    original: &DenseMatrix,
    emb: &DenseMatrix,
    alpha: f64,
    beta: f64,
) -> Result<DensityCorrelation> {
    let ro = graph_local_radius(g, original, |_, _, w| w)?;
    let re = graph_local_radius(g, emb, |i, j, _| {
        low_dim_probability(sq_dist(emb.row(i), emb.row(j)).sqrt(), alpha, beta)
    })?;
    Ok(log_radius_correlation(&ro, &re))
}

pub(crate) fn log_radius_correlation(ro: &[f64], re: &[f64]) -> DensityCorrelation {
    let mut clamped = 0;
    let mut log = |r: f64| {
        if r < RADIUS_FLOOR {
            clamped += 1;
            RADIUS_FLOOR.ln()
        } else {
            r.ln()
        }
    };
    let lo: Vec<f64> = ro.iter().map(|&r| log(r)).collect();
    let le: Vec<f64> = re.iter().map(|&r| log(r)).collect();
    DensityCorrelation {
        value: pearson(&lo, &le),
        clamped,
    }
}

/// Ordinary least squares with intercept; returns coefficients
/// `[intercept, b_1, …, b_d]`.
pub fn least_squares(x: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    let n = x.rows();
    let d = x.cols();
    let design = DenseMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let gram = design.tr_matmul(&design)?;
    let rhs = design.tr_matmul(&DenseMatrix::column_vector(y))?;
    Ok(solve_linear(&gram, &rhs)?.into_data())
}

fn adjusted_r2_on(x_train: &DenseMatrix, y_train: &[f64], x_test: &DenseMatrix, y_test: &[f64]) -> Result<f64> {
    let d = x_train.cols();
    let n = y_test.len();
    if n <= d + 1 {
        return Err(Error::contract(format!("{n} evaluation points for {d} predictors")));
    }
    let beta = least_squares(x_train, y_train)?;
    let mean = y_test.iter().sum::<f64>() / n as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (i, &yi) in y_test.iter().enumerate() {
        let pred = beta[0] + x_test.row(i).iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        ss_res += (yi - pred).powi(2);
        ss_tot += (yi - mean).powi(2);
    }
    // a constant target has no variance to explain: R² is 0 by convention
    let r2 = if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };
    Ok(1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - d as f64 - 1.0))
}

/// Adjusted R² of a linear regression of `target` on the embedding.
///
/// With `folds ≤ 1` the fit is evaluated in-sample; otherwise the value is
/// averaged over seeded k-fold held-out predictions.
pub fn adjusted_r2(emb: &DenseMatrix, target: &[f64], folds: usize, seed: u64) -> Result<f64> {
    let n = emb.rows();
    if target.len() != n {
        return Err(Error::shape(format!("{} targets for {n} rows", target.len())));
    }
    if folds <= 1 {
        return adjusted_r2_on(emb, target, emb, target);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut idx);
    let mut total = 0.0;
    for f in 0..folds {
        let test: Vec<usize> = idx.iter().copied().skip(f).step_by(folds).collect();
        let train: Vec<usize> = idx
            .iter()
            .enumerate()
            .filter(|(p, _)| p % folds != f)
            .map(|(_, &i)| i)
            .collect();
        let ytr: Vec<f64> = train.iter().map(|&i| target[i]).collect();
        let yte: Vec<f64> = test.iter().map(|&i| target[i]).collect();
        total += adjusted_r2_on(&emb.select_rows(&train), &ytr, &emb.select_rows(&test), &yte)?;
    }
    Ok(total / folds as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::knn_graph;

    #[test]
    fn rank_examples() {
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0, 1.0]), vec![4.0, 1.5, 3.0, 1.5]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn path_layout_has_perfect_spearman() {
        let pairs: Vec<_> = (0..9).map(|i| (i, i + 1)).collect();
        let g = SparseGraph::from_pairs(10, &pairs).unwrap();
        let emb = DenseMatrix::from_fn(10, 1, |i, _| 3.0 - 2.5 * i as f64);
        assert!((geodesic_spearman(&emb, &g, 1000, 0).unwrap() - 1.0).abs() < 1e-12);
        let split = SparseGraph::from_pairs(3, &[(0, 1)]).unwrap();
        assert!(geodesic_spearman(&DenseMatrix::zeros(3, 1), &split, 10, 0).is_err());
    }

    #[test]
    fn overlap_limits() {
        let mut rng = Rng::new(0);
        let x = DenseMatrix::from_fn(60, 2, |_, _| rng.normal());
        let g = knn_graph(&x, 5).unwrap();
        // union symmetrization can add neighbors beyond k, so compare to
        // the exact k-NN relation through a large enough k
        let full = knn_overlap(&x, &g, 59).unwrap();
        assert!((full - 1.0).abs() < 1e-12);
        let th: f64 = 1.1;
        let r = DenseMatrix::from_rows(&[[th.cos(), th.sin()], [-th.sin(), th.cos()]]);
        let moved = x.matmul(&r).unwrap().map(|v| v * 1.0 + 3.0);
        assert_eq!(knn_overlap(&moved, &g, 5).unwrap(), knn_overlap(&x, &g, 5).unwrap());

        let big = DenseMatrix::from_fn(500, 2, |_, _| rng.normal());
        let g = knn_graph(&big, 20).unwrap();
        let random = DenseMatrix::from_fn(500, 2, |_, _| rng.normal());
        let v = knn_overlap(&random, &g, 50).unwrap();
        assert!(v < 0.2, "{v}");
    }

    #[test]
    fn local_radius_examples() {
        let coords = DenseMatrix::from_rows(&[[0.0], [2.0]]);
        let w = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(local_radius(&w, &coords).unwrap(), vec![4.0, 4.0]);
        let coords = DenseMatrix::from_rows(&[[0.0], [1.0], [-3.0]]);
        let w = DenseMatrix::from_rows(&[[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        assert_eq!(local_radius(&w, &coords).unwrap()[0], 5.0);
        assert_eq!(local_radius(&w.scale(7.5), &coords).unwrap()[0], 5.0);
        let w = DenseMatrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!(matches!(local_radius(&w, &coords), Err(Error::DegeneratePoint { point: 2 })));
    }

    #[test]
    fn density_correlation_identity_and_shift() {
        let mut rng = Rng::new(2);
        let x = DenseMatrix::from_fn(80, 2, |i, _| rng.normal() * (1.0 + (i % 4) as f64));
        let g = knn_graph(&x, 6).unwrap();
        // identical weight patterns in both spaces
        let ro = graph_local_radius(&g, &x, |_, _, w| w).unwrap();
        let re = graph_local_radius(&g, &x, |_, _, w| w).unwrap();
        assert!((log_radius_correlation(&ro, &re).value - 1.0).abs() < 1e-12);
        // frozen weights: scaling the embedding shifts log radii by 2·log c
        let scaled = x.scale(3.0);
        let rs = graph_local_radius(&g, &scaled, |_, _, w| w).unwrap();
        let a = log_radius_correlation(&ro, &re).value;
        let b = log_radius_correlation(&ro, &rs).value;
        assert!((a - b).abs() < 1e-9);
        let v = density_correlation(&g, &x, &x, 1.57, 0.89).unwrap().value;
        assert!((-1.0..=1.0).contains(&v));
    }

    #[test]
    fn density_correlation_detects_reversal() {
        // two clusters: tight in one space, loose in the other
        let mut rows_o = vec![];
        let mut rows_e = vec![];
        for i in 0..10 {
            let t = i as f64;
            rows_o.push([t * 0.1, 0.0]);
            rows_e.push([t * 1.0, 0.0]);
        }
        for i in 0..10 {
            let t = i as f64;
            rows_o.push([100.0 + t * 1.0, 0.0]);
            rows_e.push([100.0 + t * 0.1, 0.0]);
        }
        let o = DenseMatrix::from_rows(&rows_o);
        let e = DenseMatrix::from_rows(&rows_e);
        let g = knn_graph(&o, 2).unwrap();
        let ro = graph_local_radius(&g, &o, |_, _, w| w).unwrap();
        let re = graph_local_radius(&g, &e, |_, _, w| w).unwrap();
        assert!(log_radius_correlation(&ro, &re).value < 0.0);
    }

    #[test]
    fn r2_examples() {
        let x = DenseMatrix::from_fn(30, 2, |i, j| ((i * 7 + j * 3) % 11) as f64);
        let y: Vec<f64> = (0..30).map(|i| 2.0 * x[(i, 0)] - x[(i, 1)] + 4.0).collect();
        assert!((adjusted_r2(&x, &y, 5, 0).unwrap() - 1.0).abs() < 1e-9);
        let flat = vec![3.0; 30];
        assert!(adjusted_r2(&x, &flat, 1, 0).unwrap() <= 0.0);

        // (0,0),(1,1),(2,2.1): slope 1.05, intercept -0.0167
        let x = DenseMatrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let y = [0.0, 1.0, 2.1];
        let beta = least_squares(&x, &y).unwrap();
        assert!((beta[1] - 1.05).abs() < 1e-12);
        assert!((beta[0] + 0.05 / 3.0).abs() < 1e-12);
        let pred: Vec<f64> = (0..3).map(|i| beta[0] + beta[1] * i as f64).collect();
        let mean = 3.1 / 3.0;
        let ss_res: f64 = y.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum();
        let ss_tot: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
        let want = 1.0 - (ss_res / ss_tot) * 2.0 / 1.0;
        assert!((adjusted_r2(&x, &y, 1, 0).unwrap() - want).abs() < 1e-12);
    }
}
