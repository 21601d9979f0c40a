use std::collections::BTreeMap;

use graphdr::datasets::{SyntheticKind, SyntheticSpec};
use graphdr::harness::{
    parse_summary_csv, read_records, run_benchmark, BenchOptions, DatasetEntry, ExperimentConfig, MethodEntry, RunStatus,
    RECORDS_FILE, SUMMARY_FILE,
};
use serde_json::json;

fn config(out: &std::path::Path) -> ExperimentConfig {
    let mut gnumap = MethodEntry::new("gnumap").with_params(json!({"epochs": 20}));
    gnumap.grid.insert("lr".into(), vec![json!(0.01), json!(0.05)]);
    let mut cfg = ExperimentConfig::new(
        vec![
            DatasetEntry::Synthetic(SyntheticSpec::new(SyntheticKind::Moons).with_n(90)),
            DatasetEntry::Synthetic(SyntheticSpec::new(SyntheticKind::Circles).with_n(90)),
        ],
        vec![gnumap, MethodEntry::new("pca"), MethodEntry::new("lle").with_params(json!({"k": 1}))],
    );
    cfg.metrics = vec!["accuracy".into(), "knn_overlap".into(), "davies_bouldin".into()];
    cfg.seeds = Some(vec![0, 1, 2]);
    cfg.output_dir = out.to_path_buf();
    cfg
}

#[test]
fn summary_is_recomputable_from_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let outcome = run_benchmark(&cfg, &BenchOptions::default()).unwrap();
    let records = read_records(&tmp.path().join(RECORDS_FILE)).unwrap();
    assert_eq!(records, outcome.records);
    // 2 datasets × (2 gnumap cells + pca + lle) × 3 seeds
    assert_eq!(records.len(), 24);
    assert!(records.iter().filter(|r| r.method == "lle").all(|r| r.status == RunStatus::Failed));

    let summary = parse_summary_csv(&std::fs::read_to_string(tmp.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert!(!summary.is_empty());
    let selected: BTreeMap<(String, String), usize> =
        outcome.selections.iter().map(|s| ((s.dataset.clone(), s.method.clone()), s.cell)).collect();
    for row in &summary {
        let cell = selected[&(row.dataset.clone(), row.method.clone())];
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.dataset == row.dataset && r.method == row.method && r.cell == cell)
            .filter_map(|r| r.metrics.as_ref()?.get(&row.metric))
            .collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        assert_eq!(row.n_runs, values.len());
        assert!((row.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0), "{row:?} vs {mean}");
        assert!((row.std - var.sqrt()).abs() <= 1e-12 * mean.abs().max(1.0), "{row:?}");
    }
    assert!(summary.iter().all(|r| r.method != "lle"));
}

#[test]
fn reruns_and_worker_counts_give_identical_summaries() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_benchmark(&config(a.path()), &BenchOptions::default()).unwrap();
    run_benchmark(&config(b.path()), &BenchOptions { workers: Some(3), ..Default::default() }).unwrap();
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(read(&a), read(&b));

    let resumed = run_benchmark(&config(a.path()), &BenchOptions { resume: true, ..Default::default() }).unwrap();
    // failed cells are retried, successful ones reused
    assert_eq!(resumed.resumed, 18);
    assert_eq!(resumed.executed, 6);
    assert_eq!(read(&a), read(&b));
}
