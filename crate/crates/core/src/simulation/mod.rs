//! Forward evaluation of stored controls: Monte Carlo in the parametric
//! market, stationary block bootstrap of historical returns, and summary
//! statistics.

mod bootstrap;
mod paths;
mod series;
mod stats;
mod synthetic;

pub use bootstrap::{bootstrap_paths, simulate_bootstrap, BlockSampler, BootstrapPaths, BootstrapSpec};
pub use paths::{path_rng, run_paths, StatsSpec};
pub use series::ReturnSeries;
pub use stats::{quantile_sorted, summary, Fans, SummaryStats};
pub use synthetic::{estimate_alpha_star, simulate_synthetic};
