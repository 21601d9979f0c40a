use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Rng};

/// Sampled points with optional class labels and manifold coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub coords: DenseMatrix,
    pub labels: Option<Vec<usize>>,
    /// Intrinsic manifold coordinate (the roll angle for the swiss roll).
    pub intrinsic: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn n(&self) -> usize {
        self.coords.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(0, |m| m + 1)
    }
}

/// Isotropic Gaussian blobs in 2-D around centers drawn uniformly from
/// `[-10, 10]²`. Class sizes differ by at most one, extras going to the
/// earliest classes; points are stored class by class.
pub fn make_blobs(n: usize, centers: usize, std: f64, rng: &mut Rng) -> Result<PointCloud> {
    if centers == 0 {
        return Err(Error::contract("need at least one center"));
    }
    if std <= 0.0 || !std.is_finite() {
        return Err(Error::contract(format!("std must be positive, got {std}")));
    }
    if n < centers {
        return Err(Error::contract(format!("n = {n} is smaller than centers = {centers}")));
    }
    let c: Vec<[f64; 2]> = (0..centers)
        .map(|_| [rng.uniform_range(-10.0, 10.0), rng.uniform_range(-10.0, 10.0)])
        .collect();
    let base = n / centers;
    let extra = n % centers;
    let mut coords = DenseMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (k, center) in c.iter().enumerate() {
        let size = base + usize::from(k < extra);
        for _ in 0..size {
            coords[(row, 0)] = center[0] + std * rng.normal();
            coords[(row, 1)] = center[1] + std * rng.normal();
            labels.push(k);
            row += 1;
        }
    }
    Ok(PointCloud {
        coords,
        labels: Some(labels),
        intrinsic: None,
    })
}

fn require_even(n: usize) -> Result<()> {
    if n % 2 == 1 || n == 0 {
        return Err(Error::contract(format!("n = {n} must be positive and even")));
    }
    Ok(())
}

fn add_noise(coords: &mut DenseMatrix, noise: f64, rng: &mut Rng) {
    if noise > 0.0 {
        for v in coords.data_mut() {
            *v += noise * rng.normal();
        }
    }
}

/// Two concentric circles: label 0 on the unit circle, label 1 on the circle
/// of radius `factor`. Angles are `2πk/m` for `k < m = n/2`.
pub fn make_circles(n: usize, factor: f64, noise: f64, rng: &mut Rng) -> Result<PointCloud> {
    require_even(n)?;
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::contract(format!("factor must lie in (0, 1), got {factor}")));
    }
    if noise < 0.0 {
        return Err(Error::contract("noise must be nonnegative"));
    }
    let m = n / 2;
    let mut coords = DenseMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for (class, radius) in [(0, 1.0), (1, factor)] {
        for k in 0..m {
            let theta = 2.0 * PI * k as f64 / m as f64;
            let row = class * m + k;
            coords[(row, 0)] = radius * theta.cos();
            coords[(row, 1)] = radius * theta.sin();
            labels.push(class);
        }
    }
    add_noise(&mut coords, noise, rng);
    Ok(PointCloud {
        coords,
        labels: Some(labels),
        intrinsic: None,
    })
}

/// Two interleaving half circles; `θ` runs evenly over `[0, π]` inclusive.
pub fn make_moons(n: usize, noise: f64, rng: &mut Rng) -> Result<PointCloud> {
    require_even(n)?;
    if noise < 0.0 {
        return Err(Error::contract("noise must be nonnegative"));
    }
    let m = n / 2;
    let theta = |k: usize| {
        if m == 1 {
            0.0
        } else {
            PI * k as f64 / (m - 1) as f64
        }
    };
    let mut coords = DenseMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for k in 0..m {
        let t = theta(k);
        coords[(k, 0)] = t.cos();
        coords[(k, 1)] = t.sin();
        labels.push(0);
    }
    for k in 0..m {
        let t = theta(k);
        coords[(m + k, 0)] = 1.0 - t.cos();
        coords[(m + k, 1)] = 0.5 - t.sin();
        labels.push(1);
    }
    add_noise(&mut coords, noise, rng);
    Ok(PointCloud {
        coords,
        labels: Some(labels),
        intrinsic: None,
    })
}

pub const SWISSROLL_CLASSES: usize = 10;

/// Swiss roll `(t cos t, h, t sin t)` with `t ~ U[1.5π, 4.5π]` and
/// `h ~ U[0, 21]`. Labels are quantile bins of `t`.
pub fn make_swissroll(n: usize, noise: f64, rng: &mut Rng) -> Result<PointCloud> {
    if noise < 0.0 {
        return Err(Error::contract("noise must be nonnegative"));
    }
    let t: Vec<f64> = (0..n).map(|_| 1.5 * PI * (1.0 + 2.0 * rng.uniform())).collect();
    let h: Vec<f64> = (0..n).map(|_| 21.0 * rng.uniform()).collect();
    let mut coords = DenseMatrix::zeros(n, 3);
    for i in 0..n {
        coords[(i, 0)] = t[i] * t[i].cos();
        coords[(i, 1)] = h[i];
        coords[(i, 2)] = t[i] * t[i].sin();
    }
    add_noise(&mut coords, noise, rng);
    let labels = quantile_bins(&t, SWISSROLL_CLASSES);
    Ok(PointCloud {
        coords,
        labels: Some(labels),
        intrinsic: Some(t),
    })
}

/// Bins values into `bins` equal-count classes by rank (ties by index).
pub fn quantile_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut labels = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = (rank * bins / n.max(1)).min(bins.saturating_sub(1));
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_class_sizes() {
        let pc = make_blobs(10, 3, 1.0, &mut Rng::new(0)).unwrap();
        let labels = pc.labels.unwrap();
        let count = |k| labels.iter().filter(|&&l| l == k).count();
        assert_eq!((count(0), count(1), count(2)), (4, 3, 3));
        assert!(make_blobs(2, 3, 1.0, &mut Rng::new(0)).is_err());
        assert!(make_blobs(5, 0, 1.0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn tight_blobs_collapse_to_centers() {
        let pc = make_blobs(40, 4, 1e-8, &mut Rng::new(3)).unwrap();
        let labels = pc.labels.as_ref().unwrap();
        for k in 0..4 {
            let members: Vec<usize> = (0..40).filter(|&i| labels[i] == k).collect();
            let first = pc.coords.row(members[0]);
            for &i in &members {
                let r = pc.coords.row(i);
                assert!((r[0] - first[0]).abs() < 1e-6 && (r[1] - first[1]).abs() < 1e-6);
                assert!(r[0].abs() <= 10.0 + 1e-6 && r[1].abs() <= 10.0 + 1e-6);
            }
        }
    }

    #[test]
    fn circles_formula() {
        let pc = make_circles(4, 0.5, 0.0, &mut Rng::new(0)).unwrap();
        let want = [[1.0, 0.0], [-1.0, 0.0], [0.5, 0.0], [-0.5, 0.0]];
        for (i, w) in want.iter().enumerate() {
            assert!((pc.coords[(i, 0)] - w[0]).abs() < 1e-12);
            assert!((pc.coords[(i, 1)] - w[1]).abs() < 1e-12);
        }
        assert_eq!(pc.labels.unwrap(), vec![0, 0, 1, 1]);
        let pc = make_circles(200, 0.3, 0.0, &mut Rng::new(0)).unwrap();
        for i in 0..100 {
            assert!((pc.coords[(i, 0)].hypot(pc.coords[(i, 1)]) - 1.0).abs() < 1e-12);
        }
        assert!(make_circles(5, 0.5, 0.0, &mut Rng::new(0)).is_err());
        assert!(make_circles(4, 1.0, 0.0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn moons_formula() {
        let pc = make_moons(4, 0.0, &mut Rng::new(0)).unwrap();
        let want = [[1.0, 0.0], [-1.0, 0.0], [0.0, 0.5], [2.0, 0.5]];
        for (i, w) in want.iter().enumerate() {
            assert!((pc.coords[(i, 0)] - w[0]).abs() < 1e-12, "{i}");
            assert!((pc.coords[(i, 1)] - w[1]).abs() < 1e-12, "{i}");
        }
        let pc = make_moons(100, 0.0, &mut Rng::new(0)).unwrap();
        for i in 0..50 {
            let r = pc.coords.row(i);
            assert!((r[0] * r[0] + r[1] * r[1] - 1.0).abs() < 1e-12);
        }
        assert!(make_moons(3, 0.0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn swissroll_on_manifold() {
        let pc = make_swissroll(300, 0.0, &mut Rng::new(2)).unwrap();
        let t = pc.intrinsic.as_ref().unwrap();
        for i in 0..300 {
            let r = pc.coords.row(i);
            assert!((r[0] * r[0] + r[2] * r[2] - t[i] * t[i]).abs() < 1e-9);
            assert!((1.5 * PI..=4.5 * PI).contains(&t[i]));
            assert!((0.0..=21.0).contains(&r[1]));
        }
        let labels = pc.labels.as_ref().unwrap();
        let mut order: Vec<usize> = (0..300).collect();
        order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
        for w in order.windows(2) {
            assert!(labels[w[0]] <= labels[w[1]]);
        }
        assert_eq!(pc.n_classes(), 10);
    }

    #[test]
    fn generators_are_seeded() {
        let gens: Vec<Box<dyn Fn(u64) -> PointCloud>> = vec![
            Box::new(|s| make_blobs(30, 3, 1.0, &mut Rng::new(s)).unwrap()),
            Box::new(|s| make_circles(30, 0.5, 0.1, &mut Rng::new(s)).unwrap()),
            Box::new(|s| make_moons(30, 0.1, &mut Rng::new(s)).unwrap()),
            Box::new(|s| make_swissroll(30, 0.1, &mut Rng::new(s)).unwrap()),
        ];
        for g in &gens {
            let a = g(5);
            let b = g(5);
            let c = g(6);
            assert_eq!(
                a.coords.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.coords.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            assert!((0..3).all(|i| a.coords.data()[i] != c.coords.data()[i]));
        }
    }
}
