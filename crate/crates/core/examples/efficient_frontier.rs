//! EW-LS efficient frontier from a sweep over kappa, evaluated in every
//! risk measure.

use decumulate::control::{DpSolver, ObjectiveSpec, Scenario, SolverOptions};
use decumulate::lattice::GridSpec;
use decumulate::market::MarketParams;
use decumulate::report::{frontier_csv, pareto_violations, sweep, Evaluation};
use decumulate::simulation::StatsSpec;

fn main() -> decumulate::Result<()> {
    let m = MarketParams::crsp_tbill();
    let sc = Scenario::base_case();
    let spec = GridSpec::with_default_bounds(64, 64, &m, sc.horizon, sc.w0)?;
    let solver = DpSolver::new(m, sc, spec, SolverOptions::default())?;
    let eval = Evaluation {
        n_paths: 50_000,
        seed: 9,
        stats: StatsSpec { fan_paths: 0, ..StatsSpec::default() },
    };
    let template = ObjectiveSpec::linear_shortfall(0.0, 1.0);
    let rows = sweep(&solver, &template, &[0.3, 1.0, 3.0, 10.0, 30.0], &eval, |o| {
        eprintln!("done kappa {}", o.kappa);
    })?;
    print!("{}", frontier_csv(&rows));
    let points: Vec<_> = rows.iter().filter_map(|r| r.point.clone().ok()).collect();
    println!("dominated pairs: {:?}", pareto_violations(&points, 0.05));
    Ok(())
}
