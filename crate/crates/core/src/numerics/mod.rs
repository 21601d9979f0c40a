//! Dense linear algebra: matrices, symmetric eigensolvers, thin SVD, small
//! matrix square roots, linear solves, pairwise distances, seeded RNG.

mod distance;
mod eigen;
mod linalg;
mod matrix;
mod rng;

pub use distance::{pairwise_sq_distances, sq_dist};
pub use eigen::{jacobi_eig, symmetric_eig, EigenDecomposition};
pub use linalg::{solve_linear, spd_inverse_sqrt_small, spd_sqrt_small, svd_thin, ThinSvd};
pub use matrix::DenseMatrix;
pub use rng::Rng;
