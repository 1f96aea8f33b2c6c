//! Stationary block bootstrap of monthly returns. Without historical data a
//! long model-generated series stands in; pass a CSV path to use your own.

use std::path::Path;

use decumulate::control::{bengen_strategy, Scenario};
use decumulate::market::MarketParams;
use decumulate::simulation::{simulate_bootstrap, BootstrapSpec, ReturnSeries, StatsSpec};

fn main() -> decumulate::Result<()> {
    let m = MarketParams::crsp_tbill();
    let series = match std::env::args().nth(1) {
        Some(p) => ReturnSeries::from_csv(Path::new(&p))?,
        None => ReturnSeries::from_model(&m, 12 * 1000, 5)?,
    };
    println!("{} months from {}", series.len(), series.source);
    let bengen = bengen_strategy(&Scenario::base_case());
    for years in [0.5, 1.0, 2.0] {
        let spec = BootstrapSpec {
            expected_blocksize: 12.0 * years,
            paired: true,
            circular: true,
            n_paths: 50_000,
            seed: 3,
        };
        let s = simulate_bootstrap(&bengen, &series, &spec, m.mu_c_b, &StatsSpec::default())?;
        println!(
            "Bengen, blocksize {years} y: Prob[W_T < 0] {:.4}, ES(5%) {:.1}, median W_T {:.1}",
            s.ps, s.es, s.median_terminal
        );
    }
    Ok(())
}
