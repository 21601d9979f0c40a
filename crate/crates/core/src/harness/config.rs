use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::registry::{merge_json, method_info, resolved_params};
use crate::datasets::{load_dataset_dir, GraphDataset, SyntheticSpec};
use crate::error::{Error, Result};
use crate::metrics::{self, is_registered};

/// Where a benchmark dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetEntry {
    /// Regenerated for every seed from the seed itself.
    Synthetic(SyntheticSpec),
    /// A fixed dataset directory; only the method seed varies.
    Directory { name: String, path: PathBuf },
}

impl DatasetEntry {
    pub fn name(&self) -> String {
        match self {
            DatasetEntry::Synthetic(s) => s.kind.name().to_string(),
            DatasetEntry::Directory { name, .. } => name.clone(),
        }
    }

    /// The dataset for one seed; directory paths resolve against `base`.
    pub fn materialize(&self, seed: u64, base: &Path) -> Result<GraphDataset> {
        match self {
            DatasetEntry::Synthetic(s) => s.generate(seed),
            DatasetEntry::Directory { name, path } => {
                let mut ds = load_dataset_dir(&base.join(path))?;
                ds.name = name.clone();
                Ok(ds)
            }
        }
    }
}

/// One method, its fixed parameters, and an optional grid swept on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub name: String,
    #[serde(default = "empty_object")]
    pub params: Value,
    /// Explicit parameter sets, each overlaid on `params` (for settings
    /// that are not a product, e.g. paired values).
    #[serde(default)]
    pub variants: Vec<Value>,
    /// Parameter name → candidate values; crossed with every variant, in
    /// key order.
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<Value>>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

impl MethodEntry {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            params: empty_object(),
            variants: Vec::new(),
            grid: BTreeMap::new(),
        }
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    /// Parameter sets of every cell: variants × grid (one cell when there
    /// is neither). Grid keys may be dotted paths into nested configs.
    pub fn cells(&self) -> Vec<Value> {
        let mut cells = if self.variants.is_empty() {
            vec![self.params.clone()]
        } else {
            self.variants
                .iter()
                .map(|v| {
                    let mut c = self.params.clone();
                    merge_json(&mut c, v);
                    c
                })
                .collect()
        };
        for (key, values) in &self.grid {
            let mut next = Vec::with_capacity(cells.len() * values.len());
            for cell in &cells {
                for v in values {
                    let mut c = cell.clone();
                    set_path(&mut c, key, v.clone());
                    next.push(c);
                }
            }
            cells = next;
        }
        cells
    }

    pub fn is_swept(&self) -> bool {
        self.cells().len() > 1
    }
}

fn set_path(target: &mut Value, path: &str, v: Value) {
    let mut cur = target;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cur.is_object() {
            *cur = empty_object();
        }
        let obj = cur.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), v);
            return;
        }
        cur = obj.entry(part.to_string()).or_insert_with(empty_object);
    }
}

pub const DEFAULT_REPEATS: usize = 10;

/// A benchmark: datasets × methods × grid cells × seeds, evaluated on a
/// metric list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub datasets: Vec<DatasetEntry>,
    pub methods: Vec<MethodEntry>,
    #[serde(default = "all_metrics")]
    pub metrics: Vec<String>,
    /// Explicit seeds; when absent, `0..repeats`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Metric used to pick the best grid cell per method.
    #[serde(default = "default_selection")]
    pub selection_metric: String,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub save_embeddings: bool,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn all_metrics() -> Vec<String> {
    metrics::REGISTRY.iter().map(|s| s.to_string()).collect()
}
fn default_repeats() -> usize {
    DEFAULT_REPEATS
}
fn default_selection() -> String {
    metrics::ACCURACY.to_string()
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_true() -> bool {
    true
}
fn default_workers() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(datasets: Vec<DatasetEntry>, methods: Vec<MethodEntry>) -> Self {
        Self {
            name: String::new(),
            datasets,
            methods,
            metrics: all_metrics(),
            seeds: None,
            repeats: DEFAULT_REPEATS,
            selection_metric: default_selection(),
            output_dir: default_output(),
            save_embeddings: true,
            workers: 1,
        }
    }

    /// Parses a JSON config; unknown keys are errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Validation(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn seed_list(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| (0..self.repeats as u64).collect())
    }

    /// Every problem with the config, collected rather than first-only.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.datasets.is_empty() {
            bad.push("datasets: empty".to_string());
        }
        if self.methods.is_empty() {
            bad.push("methods: empty".to_string());
        }
        if self.seed_list().is_empty() {
            bad.push("seeds: empty".to_string());
        }
        if self.workers == 0 {
            bad.push("workers: must be at least 1".to_string());
        }
        let mut names = BTreeSet::new();
        for d in &self.datasets {
            if !names.insert(d.name()) {
                bad.push(format!("datasets: duplicate {:?}", d.name()));
            }
        }
        let mut seen = BTreeSet::new();
        for m in &self.methods {
            if !seen.insert(m.name.clone()) {
                bad.push(format!("methods: duplicate {:?}", m.name));
                continue;
            }
            match method_info(&m.name) {
                None => bad.push(format!("methods: unknown method {:?}", m.name)),
                Some(info) if !info.implemented => {
                    bad.push(format!("methods: {:?} is reserved and not implemented", m.name))
                }
                Some(_) => {
                    if m.grid.values().any(|v| v.is_empty()) {
                        bad.push(format!("methods.{}.grid: empty value list", m.name));
                    }
                    for cell in m.cells() {
                        if let Err(e) = resolved_params(&m.name, &cell, 0) {
                            bad.push(format!("methods.{}: {e}", m.name));
                            break;
                        }
                    }
                }
            }
        }
        let mut mset = BTreeSet::new();
        for name in &self.metrics {
            if !is_registered(name) {
                bad.push(format!("metrics: unknown metric {name:?}"));
            } else if !mset.insert(name) {
                bad.push(format!("metrics: duplicate {name:?}"));
            }
        }
        if !is_registered(&self.selection_metric) {
            bad.push(format!("selection_metric: unknown metric {:?}", self.selection_metric));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}
