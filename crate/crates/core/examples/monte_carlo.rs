//! Forward simulation of optimal controls: DP versus Monte Carlo and the
//! percentile fans of wealth, withdrawals and stock fraction.

use decumulate::control::{DpSolver, ObjectiveSpec, Scenario, SolverOptions};
use decumulate::lattice::GridSpec;
use decumulate::market::MarketParams;
use decumulate::simulation::{simulate_synthetic, StatsSpec};

fn main() -> decumulate::Result<()> {
    let m = MarketParams::crsp_tbill();
    let sc = Scenario::base_case();
    let spec = GridSpec::with_default_bounds(128, 128, &m, sc.horizon, sc.w0)?;
    let r = DpSolver::new(m, sc, spec, SolverOptions::default())?
        .solve(&ObjectiveSpec::linear_shortfall(0.0, 30.0))?;
    let s = simulate_synthetic(&r.controls, &m, 200_000, 2024, &StatsSpec::default())?;
    println!("EW/M  DP {:.4}  MC {:.4} +- {:.4}", r.ew_per_period(), s.ew_per_period, s.ew_per_period_se);
    println!("LS    DP {:.4}  MC {:.4} +- {:.4}", r.risk_component, s.ls, s.ls_se);
    println!("ES(5%) {:.3}, PS {:.4}", s.es, s.ps);
    let fans = s.fans.expect("fans requested");
    println!("year  wealth p5/p50/p95            withdrawal p50  stock p50");
    for i in (0..sc.rebalances).step_by(5) {
        let w = fans.wealth[i];
        println!(
            "{:>4}  {:>7.1} {:>7.1} {:>7.1}   {:>14.2}  {:>9.3}",
            fans.times[i], w[0], w[1], w[2], fans.withdrawal[i][1], fans.stock_fraction[i][1]
        );
    }
    Ok(())
}
