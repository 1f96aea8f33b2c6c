//! Store controls, reload them and export heat maps of the withdrawal and
//! stock-fraction decisions.

use decumulate::control::{load_controls, save_controls, DpSolver, ObjectiveSpec, Scenario, SolverOptions};
use decumulate::lattice::GridSpec;
use decumulate::market::MarketParams;
use decumulate::report::{heatmap_csvs, read_heatmap};

fn main() -> decumulate::Result<()> {
    let m = MarketParams::crsp_tbill();
    let sc = Scenario::base_case();
    let spec = GridSpec::with_default_bounds(64, 64, &m, sc.horizon, sc.w0)?;
    let r = DpSolver::new(m, sc, spec, SolverOptions::default())?
        .solve(&ObjectiveSpec::linear_shortfall(0.0, 30.0))?;

    let dir = std::env::temp_dir().join("decumulate_heatmap");
    std::fs::create_dir_all(&dir).map_err(|e| decumulate::Error::Data(e.to_string()))?;
    let file = dir.join("controls.json");
    save_controls(&r.controls, &file)?;
    let c = load_controls(&file)?;
    assert_eq!(c, r.controls);

    let (q, p) = heatmap_csvs(&c, 0.0, 2000.0);
    decumulate::write_atomic(&dir.join("heatmap_q.csv"), q.as_bytes())?;
    decumulate::write_atomic(&dir.join("heatmap_p.csv"), p.as_bytes())?;
    let hq = read_heatmap(&dir.join("heatmap_q.csv"))?;
    println!("{} dates x {} wealth nodes in {}", hq.times.len(), hq.wealth.len(), dir.display());

    for i in [0, 10, 20, 29] {
        let row: Vec<String> = (0..=10)
            .map(|k| format!("{:>4.0}", c.q_at(i, 200.0 * k as f64)))
            .collect();
        println!("year {i:>2} q at W = 0,200,..,2000: {}", row.join(" "));
    }
    Ok(())
}
