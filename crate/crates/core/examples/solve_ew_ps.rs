//! Expected withdrawals traded against the probability of ending below W = 0.

use decumulate::control::{DpSolver, ObjectiveSpec, Scenario, SolverOptions};
use decumulate::lattice::GridSpec;
use decumulate::market::MarketParams;

fn main() -> decumulate::Result<()> {
    let m = MarketParams::crsp_tbill();
    let sc = Scenario::base_case();
    let spec = GridSpec::with_default_bounds(128, 128, &m, sc.horizon, sc.w0)?;
    let solver = DpSolver::new(m, sc, spec, SolverOptions::default())?;
    for kappa in [100.0, 2670.9] {
        let r = solver.solve(&ObjectiveSpec::shortfall_probability(0.0, kappa))?;
        println!(
            "kappa {kappa:>7}: EW/M {:.4}, Prob[W_T < 0] {:.4}",
            r.ew_per_period(),
            -r.risk_component
        );
    }
    Ok(())
}
