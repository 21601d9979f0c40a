//! Classical dimensionality reduction on point clouds (and, for Laplacian
//! eigenmaps, graphs): PCA, Isomap, LLE, Laplacian eigenmaps, exact t-SNE,
//! UMAP and DensMAP.

mod spectral;
mod tsne;
mod umap;

pub use crate::metrics::local_radius;
pub use spectral::{
    classical_mds, isomap, laplacian_eigenmap, lle, lle_weights, numerical_rank, pca, pca_fit, principal_components,
    IsomapConfig, LaplacianConfig, LleConfig, PcaConfig, PcaFit,
};
pub use tsne::{calibrate_perplexity, joint_probabilities, tsne, tsne_kl_gradient, PerplexityCalibration, TsneConfig, EARLY_EXAGGERATION};
pub use umap::{
    densmap, density_corr_term, fit_ab, fuzzy_simplicial_set, fuzzy_union, smooth_knn_sigma, umap_euclidean, DensmapConfig,
    FuzzyGraph, UmapConfig, DEFAULT_DENS_LAMBDA, SIGMA_BISECTIONS, SIGMA_TOLERANCE,
};
