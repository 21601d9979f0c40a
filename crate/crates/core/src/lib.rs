mod error;
pub mod classical_dr;
pub mod datasets;
pub mod diffengine;
pub mod gnn_baselines;
pub mod gnumap;
pub mod harness;
pub mod graph;
pub mod metrics;
pub mod numerics;

pub use error::{Error, Result};
pub use gnumap::{gnumap_train, EmbeddingResult, GnumapConfig};
