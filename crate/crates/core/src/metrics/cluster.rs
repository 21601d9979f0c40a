use crate::error::{Error, Result};
use crate::numerics::{sq_dist, DenseMatrix};

fn groups(labels: &[usize], n: usize) -> Result<Vec<Vec<usize>>> {
    if labels.len() != n {
        return Err(Error::shape(format!("{} labels for {n} rows", labels.len())));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut g = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        g[l].push(i);
    }
    g.retain(|members| !members.is_empty());
    if g.len() < 2 {
        return Err(Error::contract("need at least two non-empty clusters"));
    }
    Ok(g)
}

fn centroid(x: &DenseMatrix, members: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; x.cols()];
    for &i in members {
        for (a, v) in c.iter_mut().zip(x.row(i)) {
            *a += v;
        }
    }
    c.iter_mut().for_each(|a| *a /= members.len() as f64);
    c
}

/// Mean over clusters of the worst `(s_k + s_j) / d(c_k, c_j)`, where `s`
/// is the mean distance to the centroid. Coincident centroids with nonzero
/// scatter give `+∞`.
pub fn davies_bouldin(emb: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    let g = groups(labels, emb.rows())?;
    let cents: Vec<Vec<f64>> = g.iter().map(|m| centroid(emb, m)).collect();
    let scatter: Vec<f64> = g
        .iter()
        .zip(&cents)
        .map(|(m, c)| m.iter().map(|&i| sq_dist(emb.row(i), c).sqrt()).sum::<f64>() / m.len() as f64)
        .collect();
    let k = g.len();
    let mut total = 0.0;
    for a in 0..k {
        let mut worst: f64 = 0.0;
        for b in 0..k {
            if a == b {
                continue;
            }
            let num = scatter[a] + scatter[b];
            let den = sq_dist(&cents[a], &cents[b]).sqrt();
            let r = if den == 0.0 {
                if num == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                num / den
            };
            worst = worst.max(r);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// `(B/(K−1)) / (W/(n−K))`; `+∞` when the within-cluster scatter is zero.
pub fn calinski_harabasz(emb: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    let n = emb.rows();
    let g = groups(labels, n)?;
    let k = g.len();
    if k >= n {
        return Err(Error::contract(format!("{k} clusters for {n} points")));
    }
    let all: Vec<usize> = (0..n).collect();
    let mean = centroid(emb, &all);
    let (mut b, mut w) = (0.0, 0.0);
    for members in &g {
        let c = centroid(emb, members);
        b += members.len() as f64 * sq_dist(&c, &mean);
        w += members.iter().map(|&i| sq_dist(emb.row(i), &c)).sum::<f64>();
    }
    if w == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((b / (k - 1) as f64) / (w / (n - k) as f64))
}

/// Mean silhouette `(b − a)/max(a, b)`; members of singleton clusters
/// score 0.
pub fn silhouette(emb: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    let n = emb.rows();
    let g = groups(labels, n)?;
    let mut cluster_of = vec![0; n];
    for (c, members) in g.iter().enumerate() {
        for &i in members {
            cluster_of[i] = c;
        }
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; g.len()];
    for i in 0..n {
        let own = cluster_of[i];
        if g[own].len() == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[cluster_of[j]] += sq_dist(emb.row(i), emb.row(j)).sqrt();
            }
        }
        let a = sums[own] / (g[own].len() - 1) as f64;
        let b = (0..g.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / g[c].len() as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}
