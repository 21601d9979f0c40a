//! Graph construction and graph-analytic primitives.

mod ops;
mod sparse;

pub use ops::{
    all_pairs_shortest_paths, bridge_components, graph_laplacian, knn_graph, knn_indices,
    negative_edge_sample, normalized_adjacency, shortest_paths, spectral_embedding, EdgeLength,
    GeodesicDistances, LaplacianKind,
};
pub(crate) use ops::fix_sign;
pub use sparse::SparseGraph;
