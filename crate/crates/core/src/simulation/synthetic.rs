use super::paths::{path_rng, run_paths, StatsSpec};
use super::stats::SummaryStats;
use crate::control::ControlField;
use crate::error::Result;
use crate::market::{IncrementSampler, MarketParams};

/// Monte Carlo under the parametric market, applying the stored controls.
pub fn simulate_synthetic(
    controls: &ControlField,
    market: &MarketParams,
    n_paths: usize,
    seed: u64,
    stats: &StatsSpec,
) -> Result<SummaryStats> {
    controls.scenario.validate()?;
    let sampler = IncrementSampler::new(market, controls.scenario.dt())?;
    run_paths(controls, n_paths, stats, |k| {
        let mut rng = path_rng(seed, k);
        let sampler = &sampler;
        move |_, insolvent| {
            let inc = sampler.sample(insolvent, &mut rng);
            (inc.ds.exp(), inc.db.exp())
        }
    })
}

/// `Prob[W_T < W]` under the stored controls, with its standard error. `W`
/// is the target of the objective the controls were computed for (zero for
/// rule-based controls).
pub fn estimate_alpha_star(
    controls: &ControlField,
    market: &MarketParams,
    n_paths: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let target = controls.objective.map_or(0.0, |o| o.target);
    let stats = StatsSpec {
        alpha: 0.5,
        target,
        fan_paths: 0,
    };
    let s = simulate_synthetic(controls, market, n_paths, seed, &stats)?;
    Ok((s.ps, s.ps_se))
}
