use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use graphdr::datasets::{load_dataset_dir, read_label_file, read_matrix_csv, save_graph_dataset, write_matrix_csv, SyntheticKind, SyntheticSpec};
use graphdr::harness::{export_embedding_plot, run_benchmark, run_method, BenchOptions, ExperimentConfig};
use graphdr::metrics::{evaluate, EvalOptions, REGISTRY};
use graphdr::Result;

#[derive(Parser)]
#[command(name = "graphdr", about = "Graph embeddings and embedding-quality benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph dataset directory.
    Gen {
        #[arg(long)]
        dataset: SyntheticKind,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides the generator's default noise.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed a dataset directory with one method.
    Embed {
        #[arg(long)]
        method: String,
        /// JSON object of method parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an embedding CSV against a dataset directory.
    Eval {
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated metric names (default: all).
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a benchmark config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scatter-plot a 2-D embedding as SVG.
    Plot {
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { dataset, n, seed, noise, out } => {
            let mut spec = SyntheticSpec::new(dataset).with_n(n);
            spec.noise = noise;
            let ds = spec.generate(seed)?;
            save_graph_dataset(&ds, &out)?;
            println!("wrote {} nodes, {} edges to {}", ds.n(), ds.graph.num_edges(), out.display());
        }
        Command::Embed { method, config, data, seed, out } => {
            let params = match config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => serde_json::json!({}),
            };
            let ds = load_dataset_dir(&data)?;
            let r = run_method(&method, &params, &ds, seed)?;
            std::fs::create_dir_all(&out)?;
            write_matrix_csv(&out.join("embedding.csv"), &r.embedding)?;
            let meta = serde_json::json!({
                "method": r.method,
                "config_digest": r.config_digest,
                "seed": r.seed,
                "wall_seconds": r.wall_seconds,
                "loss_trace": r.loss_trace,
                "warnings": r.warnings,
            });
            std::fs::write(out.join("result.json"), serde_json::to_string_pretty(&meta)?)?;
            println!("{method}: {:.2}s, embedding in {}", r.wall_seconds, out.join("embedding.csv").display());
        }
        Command::Eval { embedding, data, metrics, seed } => {
            let ds = load_dataset_dir(&data)?;
            let emb = read_matrix_csv(&embedding)?;
            let names: Vec<&str> = if metrics.is_empty() {
                REGISTRY.to_vec()
            } else {
                metrics.iter().map(String::as_str).collect()
            };
            let report = evaluate(&ds, &emb, &names, &EvalOptions { seed, ..Default::default() })?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Bench { config, resume, workers, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let opts = BenchOptions {
                resume,
                workers,
                base_dir: config.parent().map(Path::to_path_buf),
                output_dir: out,
            };
            let o = run_benchmark(&cfg, &opts)?;
            let failed = o.records.iter().filter(|r| r.error.is_some()).count();
            println!("{} cells ({} run, {} resumed, {failed} failed)", o.records.len(), o.executed, o.resumed);
            for r in &o.summary {
                println!("{:12} {:20} {:18} {:>10.4} ± {:.4}  (n={})", r.dataset, r.method, r.metric, r.mean, r.std, r.n_runs);
            }
        }
        Command::Plot { embedding, labels, out } => {
            let emb = read_matrix_csv(&embedding)?;
            let labels = labels.map(|p| read_label_file(&p)).transpose()?;
            export_embedding_plot(&emb, labels.as_deref(), &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
