//! Run configuration, command workflows, frontier sweeps and the CSV files
//! they emit.

mod commands;
mod config;
mod frontier;
mod output;

pub use commands::{
    cmd_bootstrap, cmd_compare, cmd_export_heatmap, cmd_frontier, cmd_simulate, cmd_solve,
    load_series, ControlSource, Invocation, Report,
};
pub use config::{BootstrapConfig, GridConfig, MonteCarloConfig, Overrides, RunConfig};
pub use frontier::{
    frontier_csv, pareto_violations, sweep, Evaluation, FrontierOutcome, FrontierPoint,
    FRONTIER_HEADER,
};
pub use output::{
    cdf_csv, compare_row, heatmap_csvs, percentiles_csv, read_heatmap, summary_csv, HeatMap,
    OutputDir, COMPARE_HEADER,
};
