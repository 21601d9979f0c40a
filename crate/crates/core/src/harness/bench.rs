use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::pool::parallel_map;
use super::registry::{resolved_params, run_method};
use crate::datasets::{write_matrix_csv, GraphDataset};
use crate::error::{Error, Result};
use crate::gnumap::digest;
use crate::metrics::{evaluate, EvalOptions, MetricsReport, DAVIES_BOULDIN, FRECHET};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const GRID_FILE: &str = "grid.csv";
pub const SELECTION_FILE: &str = "selection.csv";
pub const RUNTIME_FILE: &str = "runtime.csv";
pub const SUMMARY_HEADER: &str = "dataset,method,metric,mean,std,n_runs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Outcome of one (dataset, method, grid cell, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Hash of everything that determines the result (not timings).
    pub digest: String,
    pub dataset: String,
    pub method: String,
    pub cell: usize,
    /// Fully resolved method configuration.
    pub params: Value,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub metrics: Option<MetricsReport>,
    /// Training time of the method.
    pub wall_seconds: f64,
    pub embedding_file: Option<String>,
}

/// Mean and sample standard deviation of one metric over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n_runs: usize,
}

/// Which grid cell represents a method on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub dataset: String,
    pub method: String,
    pub cell: usize,
    pub params: Value,
    pub n_cells: usize,
    /// True when more than one cell competed, i.e. labels chose the
    /// hyperparameters.
    pub label_selected: bool,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub dataset: String,
    pub method: String,
    pub cell: usize,
    pub params: Value,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutcome {
    pub records: Vec<RunRecord>,
    pub cells: Vec<CellSummary>,
    pub selections: Vec<Selection>,
    /// Rows of the selected cells only.
    pub summary: Vec<SummaryRow>,
    pub executed: usize,
    pub resumed: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOptions {
    /// Reuse successful records with matching digests from a previous run.
    pub resume: bool,
    /// Overrides the config's worker count.
    pub workers: Option<usize>,
    /// Base for relative dataset paths.
    pub base_dir: Option<PathBuf>,
    /// Overrides the config's output directory.
    pub output_dir: Option<PathBuf>,
}

struct Job {
    dataset: usize,
    method: usize,
    cell: usize,
    params: Value,
    resolved: Value,
    seed: u64,
    digest: String,
}

/// True when smaller values of the metric are better.
pub fn lower_is_better(metric: &str) -> bool {
    metric == DAVIES_BOULDIN || metric == FRECHET
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one run).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn jobs(cfg: &ExperimentConfig) -> Result<Vec<Job>> {
    let seeds = cfg.seed_list();
    let mut out = Vec::new();
    for (di, d) in cfg.datasets.iter().enumerate() {
        for (mi, m) in cfg.methods.iter().enumerate() {
            for (ci, params) in m.cells().into_iter().enumerate() {
                for &seed in &seeds {
                    let resolved = resolved_params(&m.name, &params, seed)?;
                    let digest = digest(&json!({
                        "dataset": d,
                        "method": m.name,
                        "params": resolved,
                        "seed": seed,
                        "metrics": cfg.metrics,
                    }));
                    out.push(Job {
                        dataset: di,
                        method: mi,
                        cell: ci,
                        params: params.clone(),
                        resolved,
                        seed,
                        digest,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn read_previous(path: &Path) -> Result<HashMap<String, RunRecord>> {
    let mut out = HashMap::new();
    if !path.exists() {
        return Ok(out);
    }
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // a run killed mid-write can leave a torn last line
        if let Ok(r) = serde_json::from_str::<RunRecord>(&line) {
            if r.status == RunStatus::Ok {
                out.insert(r.digest.clone(), r);
            }
        }
    }
    Ok(out)
}

fn run_cell(
    cfg: &ExperimentConfig,
    job: &Job,
    ds: &std::result::Result<GraphDataset, String>,
    out_dir: &Path,
) -> RunRecord {
    let dname = cfg.datasets[job.dataset].name();
    let mname = &cfg.methods[job.method].name;
    let mut rec = RunRecord {
        digest: job.digest.clone(),
        dataset: dname.clone(),
        method: mname.clone(),
        cell: job.cell,
        params: job.resolved.clone(),
        seed: job.seed,
        status: RunStatus::Failed,
        error: None,
        metrics: None,
        wall_seconds: 0.0,
        embedding_file: None,
    };
    let ds = match ds {
        Ok(ds) => ds,
        Err(e) => {
            rec.error = Some(format!("dataset: {e}"));
            return rec;
        }
    };
    let start = Instant::now();
    let result = run_method(mname, &job.params, ds, job.seed);
    rec.wall_seconds = start.elapsed().as_secs_f64();
    let emb = match result {
        Ok(r) => r,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    if cfg.save_embeddings {
        let rel = format!("embeddings/{dname}/{mname}/cell{}_seed{}.csv", job.cell, job.seed);
        let path = out_dir.join(&rel);
        let written = path
            .parent()
            .map_or(Ok(()), fs::create_dir_all)
            .map_err(Error::from)
            .and_then(|_| write_matrix_csv(&path, &emb.embedding));
        if let Err(e) = written {
            rec.error = Some(format!("writing embedding: {e}"));
            return rec;
        }
        rec.embedding_file = Some(rel);
    }
    let names: Vec<&str> = cfg.metrics.iter().map(String::as_str).collect();
    let opts = EvalOptions {
        seed: job.seed,
        ..Default::default()
    };
    match evaluate(ds, &emb.embedding, &names, &opts) {
        Ok(mut report) => {
            report.method = mname.clone();
            report.warnings.extend(emb.warnings);
            rec.metrics = Some(report);
            rec.status = RunStatus::Ok;
        }
        Err(e) => rec.error = Some(format!("metrics: {e}")),
    }
    rec
}

/// Runs every cell of the benchmark and writes, under the output directory:
/// `records.jsonl` (one record per cell), `summary.csv` (selected cells),
/// `grid.csv` (all cells), `selection.csv`, `runtime.csv` and the
/// embeddings. Failed cells are recorded and the run continues.
pub fn run_benchmark(cfg: &ExperimentConfig, opts: &BenchOptions) -> Result<BenchmarkOutcome> {
    cfg.validate()?;
    let out_dir = opts.output_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let base = opts.base_dir.clone().unwrap_or_default();
    let workers = opts.workers.unwrap_or(cfg.workers).max(1);
    fs::create_dir_all(&out_dir)?;
    let records_path = out_dir.join(RECORDS_FILE);
    let previous = if opts.resume {
        read_previous(&records_path)?
    } else {
        HashMap::new()
    };

    let all = jobs(cfg)?;
    let (done, pending): (Vec<&Job>, Vec<&Job>) = all.iter().partition(|j| previous.contains_key(&j.digest));
    let resumed = done.len();

    // one dataset per (entry, seed) that still has work
    let mut needed: Vec<(usize, u64)> = pending.iter().map(|j| (j.dataset, j.seed)).collect();
    needed.sort_unstable();
    needed.dedup();
    let built = parallel_map(needed.clone(), workers, |(d, seed)| {
        cfg.datasets[d].materialize(seed, &base).map_err(|e| e.to_string())
    });
    let datasets: HashMap<(usize, u64), _> = needed.into_iter().zip(built).collect();

    let sink = Mutex::new(if opts.resume {
        OpenOptions::new().create(true).append(true).open(&records_path)?
    } else {
        File::create(&records_path)?
    });
    let fresh = parallel_map(pending, workers, |job| {
        let rec = run_cell(cfg, job, &datasets[&(job.dataset, job.seed)], &out_dir);
        if let Ok(line) = serde_json::to_string(&rec) {
            let mut f = sink.lock().unwrap_or_else(|e| e.into_inner());
            let _ = writeln!(f, "{line}");
            let _ = f.flush();
        }
        (job.digest.clone(), rec)
    });
    let executed = fresh.len();
    let mut by_digest: HashMap<String, RunRecord> = previous;
    by_digest.extend(fresh);
    let records: Vec<RunRecord> = all
        .iter()
        .map(|j| by_digest.remove(&j.digest).expect("every job has a record"))
        .collect();

    // canonical order, independent of execution order
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    drop(sink);
    fs::write(&records_path, text)?;

    let outcome = summarize(cfg, records, executed, resumed);
    write_outputs(cfg, &outcome, &out_dir)?;
    Ok(outcome)
}

/// Aggregates records into per-cell summaries and selects the best cell
/// per (dataset, method) by the selection metric; ties keep the earlier
/// cell, and cells without the metric rank last.
pub fn summarize(cfg: &ExperimentConfig, records: Vec<RunRecord>, executed: usize, resumed: usize) -> BenchmarkOutcome {
    let mut cells = Vec::new();
    let mut selections = Vec::new();
    let mut summary = Vec::new();
    for d in &cfg.datasets {
        let dname = d.name();
        for m in &cfg.methods {
            let grid = m.cells();
            let mut best: Option<(usize, f64)> = None;
            let mut method_cells = Vec::new();
            for (ci, params) in grid.iter().enumerate() {
                let ok: Vec<&MetricsReport> = records
                    .iter()
                    .filter(|r| r.dataset == dname && r.method == m.name && r.cell == ci && r.status == RunStatus::Ok)
                    .filter_map(|r| r.metrics.as_ref())
                    .collect();
                let mut rows = Vec::new();
                for metric in &cfg.metrics {
                    let vals: Vec<f64> = ok.iter().filter_map(|rep| rep.get(metric)).collect();
                    if vals.is_empty() {
                        continue;
                    }
                    let (mean, std) = mean_std(&vals);
                    if metric == &cfg.selection_metric {
                        let key = if lower_is_better(metric) { -mean } else { mean };
                        if best.is_none_or(|(_, b)| key > b) {
                            best = Some((ci, key));
                        }
                    }
                    rows.push(SummaryRow {
                        dataset: dname.clone(),
                        method: m.name.clone(),
                        metric: metric.clone(),
                        mean,
                        std,
                        n_runs: vals.len(),
                    });
                }
                method_cells.push(CellSummary {
                    dataset: dname.clone(),
                    method: m.name.clone(),
                    cell: ci,
                    params: params.clone(),
                    rows,
                });
            }
            let chosen = best.map_or(0, |(c, _)| c);
            let value = best.map(|(_, k)| if lower_is_better(&cfg.selection_metric) { -k } else { k });
            summary.extend(method_cells[chosen].rows.iter().cloned());
            selections.push(Selection {
                dataset: dname.clone(),
                method: m.name.clone(),
                cell: chosen,
                params: grid[chosen].clone(),
                n_cells: grid.len(),
                label_selected: grid.len() > 1,
                value,
            });
            cells.extend(method_cells);
        }
    }
    BenchmarkOutcome {
        records,
        cells,
        selections,
        summary,
        executed,
        resumed,
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// The summary CSV text (header plus one row per selected-cell metric).
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.dataset),
            csv_field(&r.method),
            r.metric,
            fmt_f(r.mean),
            fmt_f(r.std),
            r.n_runs
        );
    }
    out
}

/// Reads a summary CSV back.
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(Error::contract("summary CSV header mismatch"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(Error::contract(format!("summary row {l:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::contract(format!("{s:?}: {e}")));
            Ok(SummaryRow {
                dataset: f[0].into(),
                method: f[1].into(),
                metric: f[2].into(),
                mean: num(f[3])?,
                std: num(f[4])?,
                n_runs: f[5].parse().map_err(|_| Error::contract(format!("n_runs {:?}", f[5])))?,
            })
        })
        .collect()
}

fn write_outputs(cfg: &ExperimentConfig, o: &BenchmarkOutcome, dir: &Path) -> Result<()> {
    fs::write(dir.join(SUMMARY_FILE), summary_csv(&o.summary))?;

    let mut grid = String::from("dataset,method,cell,params,metric,mean,std,n_runs\n");
    for c in &o.cells {
        let params = csv_field(&c.params.to_string());
        for r in &c.rows {
            let _ = writeln!(
                grid,
                "{},{},{},{params},{},{},{},{}",
                csv_field(&c.dataset),
                csv_field(&c.method),
                c.cell,
                r.metric,
                fmt_f(r.mean),
                fmt_f(r.std),
                r.n_runs
            );
        }
    }
    fs::write(dir.join(GRID_FILE), grid)?;

    let mut sel = String::from("dataset,method,cell,params,selection_metric,value,n_cells,label_selected\n");
    for s in &o.selections {
        let _ = writeln!(
            sel,
            "{},{},{},{},{},{},{},{}",
            csv_field(&s.dataset),
            csv_field(&s.method),
            s.cell,
            csv_field(&s.params.to_string()),
            cfg.selection_metric,
            s.value.map_or(String::new(), fmt_f),
            s.n_cells,
            s.label_selected
        );
    }
    fs::write(dir.join(SELECTION_FILE), sel)?;

    let mut rt = String::from("dataset,method,cell,mean_seconds,std_seconds,n_runs,n_failed\n");
    let mut groups: BTreeMap<(usize, usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for r in &o.records {
        let di = cfg.datasets.iter().position(|d| d.name() == r.dataset).unwrap_or(0);
        let mi = cfg.methods.iter().position(|m| m.name == r.method).unwrap_or(0);
        let g = groups.entry((di, mi, r.cell)).or_default();
        match r.status {
            RunStatus::Ok => g.0.push(r.wall_seconds),
            RunStatus::Failed => g.1 += 1,
        }
    }
    for ((di, mi, cell), (secs, failed)) in groups {
        let (m, s) = if secs.is_empty() { (f64::NAN, f64::NAN) } else { mean_std(&secs) };
        let _ = writeln!(
            rt,
            "{},{},{cell},{m:.6},{s:.6},{},{failed}",
            csv_field(&cfg.datasets[di].name()),
            csv_field(&cfg.methods[mi].name),
            secs.len()
        );
    }
    fs::write(dir.join(RUNTIME_FILE), rt)?;
    Ok(())
}

/// Reads a records file.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
