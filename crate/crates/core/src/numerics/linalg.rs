use super::{jacobi_eig, symmetric_eig, DenseMatrix};
use crate::error::{Error, Result};

/// Truncated singular value decomposition `A ≈ U diag(s) Vᵀ`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

/// Top-`k` singular triples, singular values nonincreasing.
///
/// Computed from the eigendecomposition of the smaller Gram matrix. Columns
/// of the recovered factor belonging to numerically zero singular values are
/// left at zero.
pub fn svd_thin(a: &DenseMatrix, k: usize) -> Result<ThinSvd> {
    let (rows, cols) = a.shape();
    if k == 0 || k > rows.min(cols) {
        return Err(Error::contract(format!(
            "rank {k} out of range for a {rows}x{cols} matrix"
        )));
    }
    let tall = cols <= rows;
    let gram = if tall {
        a.tr_matmul(a)?
    } else {
        a.matmul_tr(a)?
    };
    let eig = symmetric_eig(&gram)?;
    let m = eig.values.len();
    let s: Vec<f64> = (0..k).map(|i| eig.values[m - 1 - i].max(0.0).sqrt()).collect();
    let basis = DenseMatrix::from_fn(m, k, |r, c| eig.vectors[(r, m - 1 - c)]);
    // the other factor is A·basis/s (tall) or Aᵀ·basis/s (wide)
    let mut other = if tall {
        a.matmul(&basis)?
    } else {
        a.tr_matmul(&basis)?
    };
    let cutoff = s[0] * 1e-12;
    for c in 0..k {
        let scale = if s[c] > cutoff { 1.0 / s[c] } else { 0.0 };
        for r in 0..other.rows() {
            other[(r, c)] *= scale;
        }
    }
    let (u, v) = if tall { (other, basis) } else { (basis, other) };
    Ok(ThinSvd { u, s, v })
}

const SMALL_DIM: usize = 16;

/// `(A + eps·I)^{-1/2}` for a small symmetric positive semidefinite matrix.
pub fn spd_inverse_sqrt_small(a: &DenseMatrix, eps: f64) -> Result<DenseMatrix> {
    if a.rows() > SMALL_DIM {
        return Err(Error::contract(format!(
            "dimension {} exceeds {SMALL_DIM}",
            a.rows()
        )));
    }
    let mut shifted = a.clone();
    for i in 0..a.rows() {
        shifted[(i, i)] += eps;
    }
    let eig = jacobi_eig(&shifted)?;
    if let Some(&min) = eig.values.first() {
        if min <= 0.0 {
            return Err(Error::contract(format!(
                "matrix is not positive definite (smallest eigenvalue {min:e})"
            )));
        }
    }
    Ok(spectral_function(&eig.vectors, &eig.values, |l| 1.0 / l.sqrt()))
}

/// Principal square root of a small symmetric PSD matrix. Negative
/// eigenvalues from rounding are clamped to zero; the most negative one is
/// returned alongside so callers can flag real drift.
pub fn spd_sqrt_small(a: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
    if a.rows() > SMALL_DIM {
        return Err(Error::contract(format!(
            "dimension {} exceeds {SMALL_DIM}",
            a.rows()
        )));
    }
    let sym = DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let eig = jacobi_eig(&sym)?;
    let clipped = eig.values.iter().fold(0.0f64, |m, &l| m.min(l));
    Ok((
        spectral_function(&eig.vectors, &eig.values, |l| l.max(0.0).sqrt()),
        clipped,
    ))
}

fn spectral_function(vectors: &DenseMatrix, values: &[f64], f: impl Fn(f64) -> f64) -> DenseMatrix {
    let n = values.len();
    let mut out = DenseMatrix::zeros(n, n);
    for (k, &l) in values.iter().enumerate() {
        let fl = f(l);
        for i in 0..n {
            let vik = vectors[(i, k)] * fl;
            for j in 0..n {
                out[(i, j)] += vik * vectors[(j, k)];
            }
        }
    }
    out
}

/// Solves `A·X = B` by LU factorization with partial pivoting.
pub fn solve_linear(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::contract(format!(
            "solve needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != n {
        return Err(Error::shape(format!(
            "right-hand side has {} rows, expected {n}",
            b.rows()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let tiny = a.max_abs() * f64::EPSILON * n as f64;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lu[(i, col)].abs().total_cmp(&lu[(j, col)].abs()))
            .expect("nonempty range");
        if lu[(pivot, col)].abs() <= tiny {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        if pivot != col {
            for j in 0..n {
                let t = lu[(col, j)];
                lu[(col, j)] = lu[(pivot, j)];
                lu[(pivot, j)] = t;
            }
            for j in 0..x.cols() {
                let t = x[(col, j)];
                x[(col, j)] = x[(pivot, j)];
                x[(pivot, j)] = t;
            }
        }
        let d = lu[(col, col)];
        for r in (col + 1)..n {
            let f = lu[(r, col)] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                lu[(r, j)] -= f * lu[(col, j)];
            }
            for j in 0..x.cols() {
                x[(r, j)] -= f * x[(col, j)];
            }
        }
    }
    for col in (0..n).rev() {
        for j in 0..x.cols() {
            let mut acc = x[(col, j)];
            for k in (col + 1)..n {
                acc -= lu[(col, k)] * x[(k, j)];
            }
            x[(col, j)] = acc / lu[(col, col)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn random(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
    }

    #[test]
    fn svd_of_diagonal() {
        let a = DenseMatrix::from_diag(&[5.0, 3.0]);
        let svd = svd_thin(&a, 1).unwrap();
        assert!((svd.s[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn svd_of_rank_one() {
        let u = [1.0, 2.0, 2.0];
        let v = [3.0, 4.0];
        let a = DenseMatrix::from_fn(3, 2, |i, j| u[i] * v[j]);
        let svd = svd_thin(&a, 2).unwrap();
        assert!((svd.s[0] - 15.0).abs() < 1e-9);
        assert!(svd.s[1].abs() < 1e-9);
    }

    #[test]
    fn svd_matches_gram_eigenvalues() {
        let mut rng = Rng::new(3);
        let a = random(6, 4, &mut rng);
        let svd = svd_thin(&a, 4).unwrap();
        let eig = jacobi_eig(&a.transpose().matmul(&a).unwrap()).unwrap();
        for i in 0..4 {
            assert!((svd.s[i] - eig.values[3 - i].sqrt()).abs() < 1e-7);
        }
        // and reconstructs A at full rank
        let us = DenseMatrix::from_fn(6, 4, |r, c| svd.u[(r, c)] * svd.s[c]);
        let rec = us.matmul_tr(&svd.v).unwrap();
        assert!(rec.sub(&a).unwrap().frobenius_norm() < 1e-9);
        // wide input goes through the other Gram matrix
        let w = svd_thin(&a.transpose(), 4).unwrap();
        for i in 0..4 {
            assert!((w.s[i] - svd.s[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn svd_rank_out_of_range() {
        let a = DenseMatrix::zeros(3, 2);
        assert!(matches!(svd_thin(&a, 3), Err(Error::Contract(_))));
        assert!(matches!(svd_thin(&a, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn svd_agrees_with_eig_on_psd() {
        let mut rng = Rng::new(11);
        let b = random(5, 5, &mut rng);
        let a = b.tr_matmul(&b).unwrap();
        let svd = svd_thin(&a, 5).unwrap();
        let eig = symmetric_eig(&a).unwrap();
        for i in 0..5 {
            assert!((svd.s[i] - eig.values[4 - i]).abs() < 1e-7);
        }
    }

    #[test]
    fn inverse_sqrt_closed_forms() {
        let r = spd_inverse_sqrt_small(&DenseMatrix::identity(3), 0.0).unwrap();
        assert!(r.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-14);
        let r = spd_inverse_sqrt_small(&DenseMatrix::from_diag(&[4.0, 1.0]), 0.0).unwrap();
        assert!(r.sub(&DenseMatrix::from_diag(&[0.5, 1.0])).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn inverse_sqrt_rotated() {
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let r = spd_inverse_sqrt_small(&a, 0.0).unwrap();
        // eigenbasis (1,-1)/sqrt2 -> 1, (1,1)/sqrt2 -> 3
        let h = 0.5;
        let p = 1.0 / 3f64.sqrt();
        let want = DenseMatrix::from_rows(&[[h * (1.0 + p), h * (p - 1.0)], [h * (p - 1.0), h * (1.0 + p)]]);
        assert!(r.sub(&want).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_rejects_large() {
        let a = DenseMatrix::identity(17);
        assert!(matches!(spd_inverse_sqrt_small(&a, 0.0), Err(Error::Contract(_))));
    }

    #[test]
    fn square_root_squares_back() {
        let mut rng = Rng::new(5);
        let b = random(4, 4, &mut rng);
        let a = b.tr_matmul(&b).unwrap();
        let (s, clipped) = spd_sqrt_small(&a).unwrap();
        assert!(clipped > -1e-9);
        assert!(s.matmul(&s).unwrap().sub(&a).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = DenseMatrix::from_rows(&[[1.0], [2.0], [3.0]]);
        assert_eq!(solve_linear(&DenseMatrix::identity(3), &b).unwrap(), b);
        let a = DenseMatrix::from_diag(&[2.0, 4.0]);
        let x = solve_linear(&a, &DenseMatrix::from_rows(&[[2.0], [8.0]])).unwrap();
        assert_eq!(x.data(), &[1.0, 2.0]);
    }

    #[test]
    fn solve_random_spd_residual() {
        let mut rng = Rng::new(21);
        let m = random(5, 5, &mut rng);
        let mut a = m.tr_matmul(&m).unwrap();
        for i in 0..5 {
            a[(i, i)] += 0.1;
        }
        let b = random(5, 2, &mut rng);
        let x = solve_linear(&a, &b).unwrap();
        let res = a.matmul(&x).unwrap().sub(&b).unwrap().frobenius_norm();
        assert!(res <= 1e-8 * b.frobenius_norm());
    }

    #[test]
    fn solve_singular() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[[1.0], [1.0]]);
        assert!(matches!(solve_linear(&a, &b), Err(Error::Singular(_))));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn inverse_sqrt_whitens(seed in 0u64..10_000, d in 1usize..=8) {
            let mut rng = Rng::new(seed);
            let b = random(d + 3, d, &mut rng);
            let a = b.tr_matmul(&b).unwrap();
            let eps = 1e-3;
            let r = spd_inverse_sqrt_small(&a, eps).unwrap();
            let mut shifted = a.clone();
            for i in 0..d { shifted[(i, i)] += eps; }
            let w = r.matmul(&shifted).unwrap().matmul(&r).unwrap();
            proptest::prop_assert!(w.sub(&DenseMatrix::identity(d)).unwrap().max_abs() < 1e-6);
        }
    }
}
