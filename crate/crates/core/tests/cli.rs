use std::path::Path;
use std::process::{Command, Output};

fn graphdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphdr")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = graphdr(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_embed_eval_plot_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("moons");
    let run = tmp.path().join("run");
    ok(&["gen", "--dataset", "moons", "--n", "120", "--seed", "3", "--out", s(&data)]);
    assert!(data.join("edges.tsv").exists() && data.join("labels.txt").exists());

    let params = tmp.path().join("params.json");
    std::fs::write(&params, r#"{"epochs": 30}"#).unwrap();
    ok(&["embed", "--method", "gnumap", "--config", s(&params), "--data", s(&data), "--seed", "1", "--out", s(&run)]);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("result.json")).unwrap()).unwrap();
    assert_eq!(meta["method"], "gnumap");
    assert_eq!(meta["loss_trace"].as_array().unwrap().len(), 30);

    let emb = run.join("embedding.csv");
    let report: serde_json::Value =
        serde_json::from_str(&ok(&["eval", "--embedding", s(&emb), "--data", s(&data), "--metrics", "accuracy,silhouette"]))
            .unwrap();
    let acc = report["entries"]["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert!(report["entries"].get("spearman").is_none());

    let svg = tmp.path().join("plot.svg");
    ok(&["plot", "--embedding", s(&emb), "--labels", s(&data.join("labels.txt")), "--out", s(&svg)]);
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<circle").count(), 120);
}

#[test]
fn bench_resumes_and_errors_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"datasets": [{"synthetic": {"kind": "blobs", "n": 80}}],
            "methods": [{"name": "pca"}], "metrics": ["accuracy"], "seeds": [0, 1]}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let first = ok(&["bench", "--config", s(&cfg), "--out", s(&out)]);
    assert!(first.starts_with("2 cells (2 run, 0 resumed, 0 failed)"), "{first}");
    let again = ok(&["bench", "--config", s(&cfg), "--out", s(&out), "--resume"]);
    assert!(again.starts_with("2 cells (0 run, 2 resumed, 0 failed)"), "{again}");

    std::fs::write(&cfg, r#"{"datasets": [], "methods": [{"name": "dgi"}], "bogus": 1}"#).unwrap();
    let bad = graphdr(&["bench", "--config", s(&cfg)]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error: "));

    let missing = graphdr(&["embed", "--method", "pca", "--data", s(&tmp.path().join("nope")), "--out", s(&out)]);
    assert!(!missing.status.success());
}
