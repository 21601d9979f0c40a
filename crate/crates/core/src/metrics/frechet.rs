use crate::error::{Error, Result};
use crate::numerics::{spd_sqrt_small, DenseMatrix};

pub const FRECHET_MAX_DIM: usize = 16;
/// Negative eigenvalues below this magnitude are treated as rounding noise.
pub const FRECHET_DRIFT_TOL: f64 = 1e-6;

/// Fréchet distance between Gaussians fitted to two point sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetDistance {
    pub value: f64,
    /// Set when a covariance square root had to clip an eigenvalue more
    /// negative than [`FRECHET_DRIFT_TOL`].
    pub drift_flagged: bool,
}

/// Mean and unbiased (divisor `n − 1`) covariance.
pub fn gaussian_moments(x: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = x.rows() as f64;
    let mu = x.column_means();
    let c = x.centered();
    let cov = c.tr_matmul(&c).expect("same rows").scale(1.0 / (n - 1.0));
    (mu, cov)
}

/// `‖μ₁−μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2})`.
pub fn frechet_distance(emb: &DenseMatrix, reference: &DenseMatrix) -> Result<FrechetDistance> {
    if emb.rows() < 2 || reference.rows() < 2 {
        return Err(Error::contract("both point sets need at least 2 points"));
    }
    if emb.cols() != reference.cols() {
        return Err(Error::shape(format!(
            "dimensions differ: {} vs {}",
            emb.cols(),
            reference.cols()
        )));
    }
    if emb.cols() > FRECHET_MAX_DIM {
        return Err(Error::contract(format!("dimension exceeds {FRECHET_MAX_DIM}")));
    }
    let (m1, s1) = gaussian_moments(emb);
    let (m2, s2) = gaussian_moments(reference);
    let (r1, neg1) = spd_sqrt_small(&s1)?;
    let inner = r1.matmul(&s2)?.matmul(&r1)?;
    let inner = inner.add(&inner.transpose())?.scale(0.5);
    let (root, neg2) = spd_sqrt_small(&inner)?;
    let mean_term: f64 = m1.iter().zip(&m2).map(|(a, b)| (a - b) * (a - b)).sum();
    let value = mean_term + s1.trace() + s2.trace() - 2.0 * root.trace();
    Ok(FrechetDistance {
        value: value.max(0.0),
        drift_flagged: neg1.min(neg2) < -FRECHET_DRIFT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{symmetric_eig, Rng};

    #[test]
    fn identical_sets() {
        let mut rng = Rng::new(0);
        let x = DenseMatrix::from_fn(50, 2, |_, _| rng.normal());
        assert!(frechet_distance(&x, &x).unwrap().value.abs() < 1e-9);
    }

    #[test]
    fn shifted_means() {
        let x = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]);
        let y = x.map(|v| v).zip_map(&DenseMatrix::from_fn(4, 2, |_, j| [3.0, 4.0][j]), |a, b| a + b);
        let f = frechet_distance(&x, &y).unwrap();
        assert!((f.value - 25.0).abs() < 1e-9);
        assert!(!f.drift_flagged);
        assert!(frechet_distance(&x, &DenseMatrix::zeros(4, 3)).is_err());
    }

    fn eig_sqrt(a: &DenseMatrix) -> DenseMatrix {
        let e = symmetric_eig(a).unwrap();
        let d = DenseMatrix::from_diag(&e.values.iter().map(|v| v.max(0.0).sqrt()).collect::<Vec<_>>());
        e.vectors.matmul(&d).unwrap().matmul_tr(&e.vectors).unwrap()
    }

    #[test]
    fn matches_direct_eigen_formula() {
        let mut rng = Rng::new(3);
        for _ in 0..10 {
            let x = DenseMatrix::from_fn(40, 2, |_, j| rng.normal() * (1.0 + j as f64));
            let y = DenseMatrix::from_fn(30, 2, |_, _| rng.normal() * 0.7 + 1.0);
            let (m1, s1) = gaussian_moments(&x);
            let (m2, s2) = gaussian_moments(&y);
            let r = eig_sqrt(&s1);
            let inner = r.matmul(&s2).unwrap().matmul(&r).unwrap();
            let want = m1.iter().zip(&m2).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + s1.trace() + s2.trace()
                - 2.0 * eig_sqrt(&inner).trace();
            let got = frechet_distance(&x, &y).unwrap().value;
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }
}
