use nalgebra::{DMatrix, SymmetricEigen};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues ascending. Column `j` of
/// `vectors` pairs with `values[j]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

const MAX_DIM: usize = 5000;
const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::contract(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() > MAX_DIM {
        return Err(Error::contract(format!(
            "dimension {} exceeds {MAX_DIM}",
            a.rows()
        )));
    }
    let scale = a.max_abs().max(1.0);
    if a.asymmetry() > SYMMETRY_TOL * scale {
        return Err(Error::contract("matrix is not symmetric"));
    }
    Ok(())
}

fn sorted(values: Vec<f64>, vectors: DenseMatrix) -> EigenDecomposition {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let vals = order.iter().map(|&i| values[i]).collect();
    let vecs = DenseMatrix::from_fn(vectors.rows(), n, |r, c| vectors[(r, order[c])]);
    EigenDecomposition {
        values: vals,
        vectors: vecs,
    }
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Householder tridiagonalization followed by implicit shifted QR; the
/// cyclic Jacobi solver in [`jacobi_eig`] is the cross-check for it.
pub fn symmetric_eig(a: &DenseMatrix) -> Result<EigenDecomposition> {
    check_symmetric(a)?;
    let n = a.rows();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            vectors: DenseMatrix::zeros(0, 0),
        });
    }
    // symmetrize exactly so the solver only sees the lower triangle we mean
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Convergence("symmetric QR iteration cap reached".into()))?;
    let vectors = DenseMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, j)]);
    // QR eigenvectors can be loose for clustered spectra; a few Jacobi
    // sweeps on the nearly diagonal VᵀAV tighten them cheaply.
    let sym = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut b = vectors.tr_matmul(&sym)?.matmul(&vectors)?;
    let b2 = b.transpose();
    b = b.add(&b2)?.scale(0.5);
    let (values, vectors) = jacobi_sweeps(b, vectors)?;
    Ok(sorted(values, vectors))
}

/// Cyclic Jacobi eigensolver. Quadratically convergent and very accurate,
/// but O(n³) per sweep; meant for small matrices and as a reference.
pub fn jacobi_eig(a: &DenseMatrix) -> Result<EigenDecomposition> {
    check_symmetric(a)?;
    let n = a.rows();
    let m = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let (values, v) = jacobi_sweeps(m, DenseMatrix::identity(n))?;
    Ok(sorted(values, v))
}

fn off_diagonal(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes `m` by Jacobi rotations, accumulating them into `v`.
fn jacobi_sweeps(mut m: DenseMatrix, mut v: DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = m.rows();
    let norm = m.frobenius_norm();
    let mut converged = norm == 0.0 || off_diagonal(&m) <= JACOBI_TOL * norm;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Convergence(format!(
                "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                {
                    let data = m.data_mut();
                    for k in 0..n {
                        let mpk = data[p * n + k];
                        let mqk = data[q * n + k];
                        data[p * n + k] = c * mpk - s * mqk;
                        data[q * n + k] = s * mpk + c * mqk;
                    }
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        converged = off_diagonal(&m) <= JACOBI_TOL * norm;
    }
    Ok(((0..n).map(|i| m[(i, i)]).collect(), v))
}
