//! Synthetic point-cloud generators, the graph/feature construction
//! pipeline, and an on-disk dataset format.

mod generators;
mod graph_dataset;
mod synthetic;

pub use generators::{
    make_blobs, make_circles, make_moons, make_swissroll, quantile_bins, PointCloud,
    SWISSROLL_CLASSES,
};
pub use graph_dataset::{
    build_graph_dataset, build_graph_dataset_with, load_dataset_dir, load_graph_dataset,
    read_label_file, read_matrix_csv, save_graph_dataset, write_matrix_csv, ComponentPolicy, GraphDataset,
    COORD_FILE, EDGE_FILE, FEATURE_FILE, INTRINSIC_FILE, LABEL_FILE,
};
pub use synthetic::{
    SyntheticKind, SyntheticSpec, BLOB_CENTERS, BLOB_STD, CIRCLE_FACTOR, DEFAULT_FEAT_COMPONENTS,
    DEFAULT_K_GRAPH, DEFAULT_N,
};
