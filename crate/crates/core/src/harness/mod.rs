//! Experiment orchestration: config-driven benchmark runs with grid
//! sweeps, scalability and robustness protocols, and CSV/JSON/SVG output.

mod bench;
mod config;
mod plot;
mod pool;
mod protocols;
mod registry;

pub use bench::{
    lower_is_better, mean_std, parse_summary_csv, read_records, run_benchmark, summarize, summary_csv, BenchOptions,
    BenchmarkOutcome, CellSummary, RunRecord, RunStatus, Selection, SummaryRow, GRID_FILE, RECORDS_FILE, RUNTIME_FILE,
    SELECTION_FILE, SUMMARY_FILE, SUMMARY_HEADER,
};
pub use config::{DatasetEntry, ExperimentConfig, MethodEntry, DEFAULT_REPEATS};
pub use plot::{export_embedding_plot, render_line_svg, render_scatter_svg, Series, PALETTE};
pub use pool::parallel_map;
pub use protocols::{
    ls_slope, robustness_init, robustness_noise, robustness_noise_with, scalability_n, scalability_n_with, scalability_p,
    DimensionRow, InitReport, NoiseReport, ScalabilityReport, TimingRow,
};
pub use registry::{merge_json, method_info, resolved_params, run_method, MethodFamily, MethodInfo, METHODS};
