use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PointCloud;
use crate::error::{Error, Result};
use crate::graph::{bridge_components, knn_graph, spectral_embedding, SparseGraph};
use crate::numerics::DenseMatrix;

/// A graph with node features, optional labels and optional ground-truth
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDataset {
    pub name: String,
    pub graph: SparseGraph,
    pub features: DenseMatrix,
    pub labels: Option<Vec<usize>>,
    pub ground_truth_coords: Option<DenseMatrix>,
    /// Intrinsic manifold coordinate per node, when the generator has one.
    pub intrinsic: Option<Vec<f64>>,
}

impl GraphDataset {
    pub fn new(name: impl Into<String>, graph: SparseGraph, features: DenseMatrix) -> Result<Self> {
        if features.rows() != graph.n() {
            return Err(Error::shape(format!(
                "{} feature rows for {} nodes",
                features.rows(),
                graph.n()
            )));
        }
        Ok(Self {
            name: name.into(),
            graph,
            features,
            labels: None,
            ground_truth_coords: None,
            intrinsic: None,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn n_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(0, |m| m + 1)
    }

    pub fn with_features(&self, features: DenseMatrix) -> Result<Self> {
        let mut ds = Self::new(self.name.clone(), self.graph.clone(), features)?;
        ds.labels = self.labels.clone();
        ds.ground_truth_coords = self.ground_truth_coords.clone();
        ds.intrinsic = self.intrinsic.clone();
        Ok(ds)
    }
}

/// What to do when the k-NN graph falls apart into several components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentPolicy {
    /// Fail with a connectivity error.
    #[default]
    Strict,
    /// Join components through their closest cross-component point pairs
    /// (see [`bridge_components`]).
    Bridge,
}

/// k-NN graph on the point coordinates plus Laplacian-eigenmap features.
pub fn build_graph_dataset(pc: &PointCloud, k_graph: usize, feat_components: usize) -> Result<GraphDataset> {
    build_graph_dataset_with(pc, k_graph, feat_components, ComponentPolicy::Strict)
}

pub fn build_graph_dataset_with(
    pc: &PointCloud,
    k_graph: usize,
    feat_components: usize,
    policy: ComponentPolicy,
) -> Result<GraphDataset> {
    let mut graph = knn_graph(&pc.coords, k_graph)?;
    if policy == ComponentPolicy::Bridge {
        graph = bridge_components(&graph, &pc.coords)?;
    }
    let features = spectral_embedding(&graph, feat_components)?;
    let mut ds = GraphDataset::new("custom", graph, features)?;
    ds.labels = pc.labels.clone();
    ds.ground_truth_coords = Some(pc.coords.clone());
    ds.intrinsic = pc.intrinsic.clone();
    Ok(ds)
}

pub const EDGE_FILE: &str = "edges.tsv";
pub const FEATURE_FILE: &str = "features.csv";
pub const LABEL_FILE: &str = "labels.txt";
pub const COORD_FILE: &str = "coords.csv";
pub const INTRINSIC_FILE: &str = "intrinsic.txt";

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| parse_err(path, line, format!("bad number {s:?}: {e}")))
}

/// Reads a headerless numeric CSV; every row must have the same width.
pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path)?;
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|s| parse_f64(path, lineno, s))
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("row has {} columns, expected {w}", values.len()),
                ))
            }
            _ => {}
        }
        data.extend(values);
        rows += 1;
    }
    DenseMatrix::new(rows, width.unwrap_or(0), data)
}

/// Writes a headerless CSV with 17 significant digits, enough to read back
/// every `f64` exactly.
pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut out = String::with_capacity(m.rows() * m.cols() * 24);
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_edges(path: &Path, n: usize) -> Result<SparseGraph> {
    let text = fs::read_to_string(path)?;
    let mut seen = std::collections::HashMap::new();
    let mut edges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_err(path, lineno, "expected src<TAB>dst[<TAB>weight]"));
        }
        let id = |s: &str| -> Result<usize> {
            let v: usize = s
                .trim()
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad node id {s:?}")))?;
            if v >= n {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("node {v} out of range for {n} feature rows"),
                ));
            }
            Ok(v)
        };
        let (i, j) = (id(fields[0])?, id(fields[1])?);
        let w = match fields.get(2) {
            Some(s) => parse_f64(path, lineno, s)?,
            None => 1.0,
        };
        if i == j {
            return Err(parse_err(path, lineno, "self-loop"));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(parse_err(path, lineno, format!("weight {w} outside [0, 1]")));
        }
        let key = (i.min(j), i.max(j));
        if let Some(&prev) = seen.get(&key) {
            if prev != w {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("edge {i}-{j} repeated with weight {w}, earlier {prev}"),
                ));
            }
            continue;
        }
        seen.insert(key, w);
        edges.push((i, j, w));
    }
    SparseGraph::from_edges(n, &edges)
}

fn read_labels(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::with_capacity(n);
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        labels.push(
            line.trim()
                .parse()
                .map_err(|_| parse_err(path, idx + 1, format!("bad label {line:?}")))?,
        );
    }
    if labels.len() != n {
        return Err(parse_err(
            path,
            text.lines().count(),
            format!("{} labels for {n} nodes", labels.len()),
        ));
    }
    Ok(labels)
}

/// Reads a label file (one non-negative integer per line).
pub fn read_label_file(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    let n = text.lines().filter(|l| !l.trim().is_empty()).count();
    read_labels(path, n)
}

/// Loads a dataset from an edge list, a feature CSV and optional labels.
pub fn load_graph_dataset(edge_path: &Path, feature_path: &Path, label_path: Option<&Path>) -> Result<GraphDataset> {
    let features = read_matrix_csv(feature_path)?;
    let graph = read_edges(edge_path, features.rows())?;
    let mut ds = GraphDataset::new("loaded", graph, features)?;
    if let Some(p) = label_path {
        ds.labels = Some(read_labels(p, ds.n())?);
    }
    Ok(ds)
}

/// Loads a dataset directory written by [`save_graph_dataset`].
pub fn load_dataset_dir(dir: &Path) -> Result<GraphDataset> {
    let labels = dir.join(LABEL_FILE);
    let mut ds = load_graph_dataset(
        &dir.join(EDGE_FILE),
        &dir.join(FEATURE_FILE),
        labels.exists().then_some(labels.as_path()),
    )?;
    let coords = dir.join(COORD_FILE);
    if coords.exists() {
        ds.ground_truth_coords = Some(read_matrix_csv(&coords)?);
    }
    let intrinsic = dir.join(INTRINSIC_FILE);
    if intrinsic.exists() {
        let m = read_matrix_csv(&intrinsic)?;
        if m.rows() != ds.n() || m.cols() != 1 {
            return Err(parse_err(&intrinsic, m.rows(), format!("expected {} single values", ds.n())));
        }
        ds.intrinsic = Some(m.into_data());
    }
    if let Some(name) = dir.file_name() {
        ds.name = name.to_string_lossy().into_owned();
    }
    Ok(ds)
}

pub fn save_graph_dataset(ds: &GraphDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut f = fs::File::create(dir.join(EDGE_FILE))?;
    writeln!(f, "# src\tdst\tweight ({} nodes)", ds.n())?;
    for (i, j, w) in ds.graph.edges() {
        writeln!(f, "{i}\t{j}\t{w:.16e}")?;
    }
    write_matrix_csv(&dir.join(FEATURE_FILE), &ds.features)?;
    if let Some(labels) = &ds.labels {
        let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
        fs::write(dir.join(LABEL_FILE), text)?;
    }
    if let Some(c) = &ds.ground_truth_coords {
        write_matrix_csv(&dir.join(COORD_FILE), c)?;
    }
    if let Some(t) = &ds.intrinsic {
        write_matrix_csv(&dir.join(INTRINSIC_FILE), &DenseMatrix::column_vector(t))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{make_blobs, make_swissroll};
    use crate::numerics::Rng;

    #[test]
    fn swissroll_pipeline_shape() {
        let pc = make_swissroll(500, 0.0, &mut Rng::new(1)).unwrap();
        let ds = build_graph_dataset(&pc, 20, 10).unwrap();
        assert_eq!(ds.features.shape(), (500, 10));
        for i in 0..500 {
            assert!(ds.graph.degree(i) >= 20);
        }
    }

    #[test]
    fn tight_blobs_disconnect() {
        let pc = make_blobs(40, 4, 1e-8, &mut Rng::new(0)).unwrap();
        assert!(matches!(build_graph_dataset(&pc, 2, 2), Err(Error::Connectivity { .. })));
        let ds = build_graph_dataset_with(&pc, 2, 2, ComponentPolicy::Bridge).unwrap();
        assert!(ds.graph.is_connected());
    }

    #[test]
    fn loader_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let e = dir.path().join("e.tsv");
        let f = dir.path().join("f.csv");
        fs::write(&f, "1,2\n3,4\n5,6\n").unwrap();
        fs::write(&e, "# header\n0\t1\n0\t7\n").unwrap();
        match load_graph_dataset(&e, &f, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        fs::write(&f, "1,2\n3\n").unwrap();
        assert!(matches!(load_graph_dataset(&e, &f, None), Err(Error::Parse { line: 2, .. })));
        fs::write(&f, "1,2\n3,4\n").unwrap();
        fs::write(&e, "0\t1\t1.0\n1\t0\t0.5\n").unwrap();
        assert!(matches!(load_graph_dataset(&e, &f, None), Err(Error::Parse { line: 2, .. })));
        fs::write(&e, "0\t1\n").unwrap();
        let ds = load_graph_dataset(&e, &f, None).unwrap();
        assert_eq!(ds.graph.num_edges(), 1);
    }
}
