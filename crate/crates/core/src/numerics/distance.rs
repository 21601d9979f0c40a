use super::DenseMatrix;

/// All pairwise squared Euclidean distances between the rows of `x`.
///
/// Uses the expanded form `|a|² + |b|² - 2a·b`; rounding can push it
/// slightly below zero, so negatives are clamped to exactly 0. The result
/// is exactly symmetric with a zero diagonal.
pub fn pairwise_sq_distances(x: &DenseMatrix) -> DenseMatrix {
    let n = x.rows();
    let norms: Vec<f64> = (0..n).map(|i| x.row(i).iter().map(|v| v * v).sum()).collect();
    let gram = x.matmul_tr(x).expect("same column count");
    let mut d = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (norms[i] + norms[j] - 2.0 * gram[(i, j)]).max(0.0);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Squared Euclidean distance between two equally long slices.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
