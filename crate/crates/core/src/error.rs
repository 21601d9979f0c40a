use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("matrix is singular to working precision: {0}")]
    Singular(String),

    #[error("graph is not connected ({components} components)")]
    Connectivity { components: usize },

    #[error("node {node} has zero degree")]
    DegenerateDegree { node: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("bandwidth calibration failed on row {row}")]
    Calibration { row: usize },

    #[error("class {class} has {members} members, fewer than {folds} folds")]
    Stratification {
        class: usize,
        members: usize,
        folds: usize,
    },

    #[error("point {point} has zero neighbor weight mass")]
    DegeneratePoint { point: usize },

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
