use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::classical_dr::{
    densmap, isomap, laplacian_eigenmap, lle, pca, tsne, umap_euclidean, DensmapConfig, IsomapConfig, LaplacianConfig,
    LleConfig, PcaConfig, TsneConfig, UmapConfig,
};
use crate::datasets::GraphDataset;
use crate::error::{Error, Result};
use crate::gnn_baselines::{ccassg_train, gae_train, grace_train, vgae_train, AugmentConfig, ContrastConfig, GaeConfig};
use crate::gnumap::{gnumap_train, EmbeddingResult, GnumapConfig};

/// How a method consumes a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodFamily {
    /// Graph plus node features through a GCN encoder.
    Gnn,
    /// The node features as a point cloud (or the graph, for eigenmaps).
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodInfo {
    pub name: &'static str,
    pub family: MethodFamily,
    /// Accepts an `init_scheme` parameter.
    pub weight_init: bool,
    pub implemented: bool,
}

const fn gnn(name: &'static str) -> MethodInfo {
    MethodInfo {
        name,
        family: MethodFamily::Gnn,
        weight_init: true,
        implemented: true,
    }
}

const fn classical(name: &'static str) -> MethodInfo {
    MethodInfo {
        name,
        family: MethodFamily::Classical,
        weight_init: false,
        implemented: true,
    }
}

const fn reserved(name: &'static str) -> MethodInfo {
    MethodInfo {
        name,
        family: MethodFamily::Gnn,
        weight_init: false,
        implemented: false,
    }
}

/// Every method name the harness knows. The reserved entries are accepted
/// by name but fail with a not-implemented error when run.
pub const METHODS: [MethodInfo; 15] = [
    gnn("gnumap"),
    gnn("gae"),
    gnn("vgae"),
    gnn("grace"),
    gnn("cca_ssg"),
    classical("pca"),
    classical("isomap"),
    classical("lle"),
    classical("laplacian_eigenmap"),
    classical("tsne"),
    classical("umap"),
    classical("densmap"),
    reserved("dgi"),
    reserved("bgrl"),
    reserved("spagcn"),
];

pub fn method_info(name: &str) -> Option<&'static MethodInfo> {
    METHODS.iter().find(|m| m.name == name)
}

/// Recursively overlays `patch` onto `base`; objects merge, anything else
/// replaces.
pub fn merge_json(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// Default config with `params` overlaid and the run seed written into
/// whichever `seed` field the config has. Unknown keys are errors.
fn build<T: Default + Serialize + DeserializeOwned>(params: &Value, seed: u64, method: &str) -> Result<T> {
    let mut v = serde_json::to_value(T::default())?;
    merge_json(&mut v, params);
    set_seed(&mut v, seed);
    serde_json::from_value(v).map_err(|e| Error::Validation(vec![format!("{method}: {e}")]))
}

fn set_seed(v: &mut Value, seed: u64) {
    if let Value::Object(m) = v {
        if m.contains_key("seed") {
            m.insert("seed".into(), seed.into());
        }
        for child in m.values_mut() {
            set_seed(child, seed);
        }
    }
}

/// Splits a two-view method's parameters into the augmentation part
/// (under `augment`) and the rest.
fn two_view(params: &Value, seed: u64, method: &str) -> Result<(AugmentConfig, ContrastConfig)> {
    let mut rest = params.as_object().cloned().unwrap_or_default();
    let aug = rest.remove("augment").unwrap_or(Value::Object(Map::new()));
    let aug: AugmentConfig = build(&aug, seed, method)?;
    let cfg: ContrastConfig = build(&Value::Object(rest), seed, method)?;
    Ok((aug, cfg))
}

/// The fully resolved configuration a method would run with, as JSON.
pub fn resolved_params(method: &str, params: &Value, seed: u64) -> Result<Value> {
    let info = method_info(method).ok_or_else(|| Error::Validation(vec![format!("unknown method {method:?}")]))?;
    if !info.implemented {
        return Err(Error::NotImplemented(format!("method {method:?} is reserved")));
    }
    if !params.is_object() {
        return Err(Error::Validation(vec![format!("{method}: params must be an object")]));
    }
    Ok(match method {
        "gnumap" => serde_json::to_value(build::<GnumapConfig>(params, seed, method)?)?,
        "gae" | "vgae" => serde_json::to_value(build::<GaeConfig>(params, seed, method)?)?,
        "grace" | "cca_ssg" => {
            let (aug, cfg) = two_view(params, seed, method)?;
            let mut v = serde_json::to_value(cfg)?;
            v["augment"] = serde_json::to_value(aug)?;
            v
        }
        "pca" => serde_json::to_value(build::<PcaConfig>(params, seed, method)?)?,
        "isomap" => serde_json::to_value(build::<IsomapConfig>(params, seed, method)?)?,
        "lle" => serde_json::to_value(build::<LleConfig>(params, seed, method)?)?,
        "laplacian_eigenmap" => serde_json::to_value(build::<LaplacianConfig>(params, seed, method)?)?,
        "tsne" => serde_json::to_value(build::<TsneConfig>(params, seed, method)?)?,
        "umap" => serde_json::to_value(build::<UmapConfig>(params, seed, method)?)?,
        "densmap" => serde_json::to_value(build::<DensmapConfig>(params, seed, method)?)?,
        _ => unreachable!("registry and dispatch agree"),
    })
}

/// Runs a registered method on a dataset. GNN methods see the graph and
/// features; point-cloud methods see the features; Laplacian eigenmaps see
/// the graph (with the features as heat-kernel coordinates).
pub fn run_method(method: &str, params: &Value, ds: &GraphDataset, seed: u64) -> Result<EmbeddingResult> {
    resolved_params(method, params, seed)?;
    let x = &ds.features;
    match method {
        "gnumap" => gnumap_train(ds, &build(params, seed, method)?),
        "gae" => gae_train(ds, &build(params, seed, method)?),
        "vgae" => vgae_train(ds, &build(params, seed, method)?),
        "grace" => {
            let (aug, cfg) = two_view(params, seed, method)?;
            grace_train(ds, &aug, &cfg)
        }
        "cca_ssg" => {
            let (aug, cfg) = two_view(params, seed, method)?;
            ccassg_train(ds, &aug, &cfg)
        }
        "pca" => pca(x, &build(params, seed, method)?),
        "isomap" => isomap(x, &build(params, seed, method)?),
        "lle" => lle(x, &build(params, seed, method)?),
        "laplacian_eigenmap" => laplacian_eigenmap(&ds.graph, Some(x), &build(params, seed, method)?),
        "tsne" => tsne(x, &build(params, seed, method)?),
        "umap" => umap_euclidean(x, &build(params, seed, method)?),
        "densmap" => densmap(x, &build(params, seed, method)?),
        _ => unreachable!("checked by resolved_params"),
    }
}
