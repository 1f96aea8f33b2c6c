//! Expected withdrawals traded against linear shortfall below W = 0.

use decumulate::control::{DpSolver, ObjectiveSpec, Scenario, SolverOptions};
use decumulate::lattice::GridSpec;
use decumulate::market::MarketParams;

fn main() -> decumulate::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(128);
    let m = MarketParams::crsp_tbill();
    let sc = Scenario::base_case();
    let spec = GridSpec::with_default_bounds(n, n, &m, sc.horizon, sc.w0)?;
    let solver = DpSolver::new(m, sc, spec, SolverOptions::default())?;
    let r = solver.solve(&ObjectiveSpec::linear_shortfall(0.0, 30.0))?;
    println!("grid {n}x{n}");
    println!("value        {:.4}", r.value);
    println!("EW / M       {:.4}", r.ew_per_period());
    println!("E[min(W_T,0)] {:.5}", r.risk_component);
    println!("E[W_T]       {:.3}", r.expected_terminal_wealth);
    println!("residual     {:.1e}", r.decomposition_residual());
    println!("first withdrawal {:.2}, first stock fraction {:.3}",
        r.controls.q_at(0, sc.w0),
        r.controls.p_at(0, sc.w0 - r.controls.q_at(0, sc.w0)));
    Ok(())
}
