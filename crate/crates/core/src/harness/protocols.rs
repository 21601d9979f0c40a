//! Scalability and robustness protocols: runtime against sample size,
//! metrics against input dimension, metrics against noise, and metric
//! dispersion across weight initializations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::MethodEntry;
use super::plot::{render_line_svg, Series};
use super::registry::{merge_json, method_info, run_method};
use crate::classical_dr::{numerical_rank, principal_components};
use crate::datasets::{SyntheticKind, SyntheticSpec};
use crate::diffengine::InitScheme;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalOptions};

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn single_cell(method: &MethodEntry) -> Result<Value> {
    let info = method_info(&method.name).ok_or_else(|| Error::Validation(vec![format!("unknown method {:?}", method.name)]))?;
    if !info.implemented {
        return Err(Error::NotImplemented(format!("method {:?} is reserved", method.name)));
    }
    let cells = method.cells();
    if cells.len() != 1 {
        return Err(Error::Validation(vec![format!("{}: protocols take a single parameter set, not a grid", method.name)]));
    }
    Ok(cells.into_iter().next().expect("one cell"))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// One timed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub size: usize,
    pub seed: u64,
    pub seconds: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityReport {
    pub rows: Vec<TimingRow>,
    /// Per size: mean seconds over successful seeds.
    pub mean_seconds: Vec<(usize, f64)>,
    /// Slope of log(runtime) against log(n).
    pub slope: f64,
}

impl ScalabilityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,seed,seconds,error\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.size,
                r.seed,
                r.seconds.map_or(String::new(), |s| format!("{s:.6}")),
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
            );
        }
        out
    }

    pub fn to_svg(&self, name: &str) -> String {
        let s = Series {
            name: format!("{name} (slope {:.2})", self.slope),
            points: self.mean_seconds.iter().map(|&(n, t)| (n as f64, t)).collect(),
        };
        render_line_svg(&[s], "n", "seconds", true)
    }

    /// Writes `scalability_n.csv` and `scalability_n.svg` into `dir`.
    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("scalability_n.csv"), self.to_csv())?;
        std::fs::write(dir.join("scalability_n.svg"), self.to_svg(name))?;
        Ok(())
    }
}

/// Times `run(n, seed)` for every size and seed and fits the log–log slope
/// of mean runtime against size. Needs at least three sizes, and at least
/// three of them with a successful run.
pub fn scalability_n_with<F>(sizes: &[usize], seeds: &[u64], mut run: F) -> Result<ScalabilityReport>
where
    F: FnMut(usize, u64) -> Result<f64>,
{
    let mut distinct = sizes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || seeds.is_empty() {
        return Err(Error::contract(format!("need at least 3 distinct sizes and a seed, got {sizes:?}")));
    }
    let mut rows = Vec::new();
    let mut mean_seconds = Vec::new();
    for &n in sizes {
        let mut ok = Vec::new();
        for &seed in seeds {
            match run(n, seed) {
                Ok(s) => {
                    ok.push(s);
                    rows.push(TimingRow { size: n, seed, seconds: Some(s), error: None });
                }
                Err(e) => rows.push(TimingRow { size: n, seed, seconds: None, error: Some(e.to_string()) }),
            }
        }
        if !ok.is_empty() {
            mean_seconds.push((n, mean(&ok)));
        }
    }
    if mean_seconds.len() < 3 {
        return Err(Error::contract(format!("only {} sizes ran successfully; need 3", mean_seconds.len())));
    }
    let lx: Vec<f64> = mean_seconds.iter().map(|p| (p.0 as f64).ln()).collect();
    let ly: Vec<f64> = mean_seconds.iter().map(|p| p.1.max(1e-9).ln()).collect();
    Ok(ScalabilityReport {
        rows,
        slope: ls_slope(&lx, &ly),
        mean_seconds,
    })
}

/// Runtime of `method` on synthetic datasets of each size. Only the
/// method's own run is timed, not dataset generation.
pub fn scalability_n(method: &MethodEntry, spec: &SyntheticSpec, sizes: &[usize], seeds: &[u64]) -> Result<ScalabilityReport> {
    let params = single_cell(method)?;
    scalability_n_with(sizes, seeds, |n, seed| {
        let ds = spec.clone().with_n(n).generate(seed)?;
        let start = Instant::now();
        run_method(&method.name, &params, &ds, seed)?;
        Ok(start.elapsed().as_secs_f64())
    })
}

/// One (dimension, seed) run of [`scalability_p`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRow {
    /// Number of principal components kept; `None` is the unreduced input.
    pub components: Option<usize>,
    pub seed: u64,
    pub seconds: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
    pub error: Option<String>,
}

/// Replaces the features by their leading principal components (centered,
/// unscaled, so full rank is a pure rotation) and reruns the method. The
/// unreduced run is included as the reference row for each seed.
pub fn scalability_p(
    method: &MethodEntry,
    spec: &SyntheticSpec,
    components: &[usize],
    seeds: &[u64],
    metrics: &[&str],
) -> Result<Vec<DimensionRow>> {
    let params = single_cell(method)?;
    let mut rows = Vec::new();
    for &seed in seeds {
        let ds = spec.generate(seed)?;
        let rank = numerical_rank(&ds.features)?;
        if let Some(&p) = components.iter().find(|&&p| p == 0 || p > rank) {
            return Err(Error::contract(format!("{p} components requested; feature rank is {rank}")));
        }
        let opts = EvalOptions { seed, ..Default::default() };
        for p in std::iter::once(None).chain(components.iter().map(|&p| Some(p))) {
            let input = match p {
                None => ds.clone(),
                Some(p) => ds.with_features(principal_components(&ds.features, p)?)?,
            };
            let start = Instant::now();
            let mut row = DimensionRow { components: p, seed, seconds: None, metrics: BTreeMap::new(), error: None };
            match run_method(&method.name, &params, &input, seed) {
                Ok(r) => {
                    row.seconds = Some(start.elapsed().as_secs_f64());
                    match evaluate(&input, &r.embedding, metrics, &opts) {
                        Ok(rep) => row.metrics = rep.entries,
                        Err(e) => row.error = Some(e.to_string()),
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Per-level metric values over seeds, with the noise-free baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub levels: Vec<f64>,
    /// Per level: the metric for each seed that succeeded.
    pub values: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    /// `means / baseline`, the baseline being the noise-0 mean.
    pub normalized: Vec<f64>,
    /// Slope of the mean metric against the noise level.
    pub slope: f64,
    pub errors: Vec<String>,
}

impl NoiseReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("noise,mean,normalized,n_runs\n");
        for i in 0..self.levels.len() {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{}",
                self.levels[i],
                self.means[i],
                self.normalized[i],
                self.values[i].len()
            );
        }
        out
    }

    pub fn to_svg(&self, name: &str, metric: &str) -> String {
        let s = Series {
            name: format!("{name} (slope {:.3})", self.slope),
            points: self.levels.iter().copied().zip(self.means.iter().copied()).collect(),
        };
        render_line_svg(&[s], "noise", metric, false)
    }
}

/// Evaluates `run(noise, seed)` over every level and seed. Needs at least
/// three levels, one of them 0 (the baseline).
pub fn robustness_noise_with<F>(levels: &[f64], seeds: &[u64], mut run: F) -> Result<NoiseReport>
where
    F: FnMut(f64, u64) -> Result<f64>,
{
    if levels.len() < 3 || !levels.contains(&0.0) || seeds.is_empty() {
        return Err(Error::contract(format!("need ≥ 3 noise levels including 0 and a seed, got {levels:?}")));
    }
    if levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::contract(format!("noise levels must be non-negative, got {levels:?}")));
    }
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for &level in levels {
        let mut v = Vec::new();
        for &seed in seeds {
            match run(level, seed) {
                Ok(x) => v.push(x),
                Err(e) => errors.push(format!("noise {level}, seed {seed}: {e}")),
            }
        }
        if v.is_empty() {
            return Err(Error::contract(format!("every run at noise {level} failed: {errors:?}")));
        }
        values.push(v);
    }
    let means: Vec<f64> = values.iter().map(|v| mean(v)).collect();
    let base = means[levels.iter().position(|&l| l == 0.0).expect("checked")];
    Ok(NoiseReport {
        levels: levels.to_vec(),
        normalized: means.iter().map(|m| m / base).collect(),
        slope: ls_slope(levels, &means),
        means,
        values,
        errors,
    })
}

/// Regenerates circles or moons at each noise level and records `metric`.
pub fn robustness_noise(
    method: &MethodEntry,
    kind: SyntheticKind,
    levels: &[f64],
    seeds: &[u64],
    metric: &str,
) -> Result<NoiseReport> {
    if !matches!(kind, SyntheticKind::Circles | SyntheticKind::Moons) {
        return Err(Error::contract(format!("noise robustness runs on circles or moons, not {kind}")));
    }
    let params = single_cell(method)?;
    robustness_noise_with(levels, seeds, |noise, seed| {
        let ds = SyntheticSpec::new(kind).with_noise(noise).generate(seed)?;
        let r = run_method(&method.name, &params, &ds, seed)?;
        let rep = evaluate(&ds, &r.embedding, &[metric], &EvalOptions { seed, ..Default::default() })?;
        rep.get(metric)
            .ok_or_else(|| Error::contract(format!("{metric} skipped: {:?}", rep.skipped.get(metric))))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitReport {
    pub schemes: Vec<InitScheme>,
    pub values: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    /// Largest minus smallest per-scheme mean.
    pub range: f64,
    pub errors: Vec<String>,
}

impl InitReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,mean,n_runs\n");
        for i in 0..self.schemes.len() {
            let _ = writeln!(out, "{},{:.16e},{}", self.schemes[i], self.means[i], self.values[i].len());
        }
        let _ = writeln!(out, "range,{:.16e},", self.range);
        out
    }
}

/// Per-scheme mean of `metric` over seeds and the spread of those means.
pub fn robustness_init(
    method: &MethodEntry,
    spec: &SyntheticSpec,
    schemes: &[&str],
    seeds: &[u64],
    metric: &str,
) -> Result<InitReport> {
    let mut bad = Vec::new();
    let parsed: Vec<InitScheme> = schemes
        .iter()
        .filter_map(|s| s.parse().map_err(|_| bad.push(format!("unknown init scheme {s:?}"))).ok())
        .collect();
    match method_info(&method.name) {
        Some(info) if info.implemented && info.weight_init => {}
        _ => bad.push(format!("{:?} has no weight initialization to vary", method.name)),
    }
    if schemes.is_empty() {
        bad.push("no schemes given".into());
    }
    if !bad.is_empty() {
        return Err(Error::Validation(bad));
    }
    let base = single_cell(method)?;
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for scheme in &parsed {
        let mut params = base.clone();
        merge_json(&mut params, &serde_json::json!({ "init_scheme": scheme }));
        let mut v = Vec::new();
        for &seed in seeds {
            let outcome = spec.generate(seed).and_then(|ds| {
                let r = run_method(&method.name, &params, &ds, seed)?;
                let rep = evaluate(&ds, &r.embedding, &[metric], &EvalOptions { seed, ..Default::default() })?;
                rep.get(metric).ok_or_else(|| Error::contract(format!("{metric} skipped")))
            });
            match outcome {
                Ok(x) => v.push(x),
                Err(e) => errors.push(format!("{scheme}, seed {seed}: {e}")),
            }
        }
        values.push(v);
    }
    let means: Vec<f64> = values.iter().map(|v| if v.is_empty() { f64::NAN } else { mean(v) }).collect();
    let finite: Vec<f64> = means.iter().copied().filter(|m| m.is_finite()).collect();
    let range = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max) - finite.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(InitReport {
        schemes: parsed,
        values,
        means,
        range: if finite.is_empty() { f64::NAN } else { range },
        errors,
    })
}
