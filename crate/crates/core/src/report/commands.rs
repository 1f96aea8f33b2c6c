use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::frontier::{frontier_csv, sweep, Evaluation};
use super::output::{
    cdf_csv, compare_row, heatmap_csvs, percentiles_csv, summary_csv, OutputDir, COMPARE_HEADER,
};
use crate::control::{bengen_strategy, load_controls, save_controls, ControlField, DpSolver, SolveResult};
use crate::error::{Error, Result};
use crate::simulation::{simulate_bootstrap, simulate_synthetic, ReturnSeries, SummaryStats};

const CDF_POINTS: usize = 2000;
const DEFAULT_OUTPUT: &str = "decumulate-out";

/// How a command treats its output directory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Invocation {
    /// Overwrite files in a non-empty output directory.
    pub force: bool,
    /// Validate inputs and stop before any computation.
    pub dry_run: bool,
}

/// Where a strategy's controls come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSource {
    File(PathBuf),
    /// Constant 4% of initial wealth, half in stocks.
    Bengen,
}

impl ControlSource {
    pub fn load(&self, cfg: &RunConfig) -> Result<ControlField> {
        match self {
            ControlSource::File(p) => load_controls(p),
            ControlSource::Bengen => Ok(bengen_strategy(&cfg.scenario)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ControlSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            ControlSource::Bengen => "bengen".into(),
        }
    }
}

/// What a command did: human-readable lines and the files it wrote.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn say(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

fn output_dir(cfg: &RunConfig, inv: Invocation) -> Result<OutputDir> {
    let root = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    OutputDir::prepare(&root, inv.force)
}

fn dry_run_report(cfg: &RunConfig, what: &str) -> Result<Report> {
    let grid = cfg.grid_spec()?;
    let mut r = Report::default();
    r.say(format!(
        "dry run: {what} config is valid (grid {}x{}, {} rebalances); nothing computed",
        grid.n_s, grid.n_b, cfg.scenario.rebalances
    ));
    Ok(r)
}

fn build_solver(cfg: &RunConfig) -> Result<DpSolver> {
    DpSolver::new(cfg.market, cfg.scenario, cfg.grid_spec()?, cfg.solver)
}

fn decomposition_log(r: &SolveResult) -> String {
    let sc = &r.controls.scenario;
    let o = &r.objective;
    let mut s = String::new();
    let _ = writeln!(s, "objective        {:?} kappa={} W={} alpha={}", o.kind, o.kappa, o.target, o.alpha);
    let _ = writeln!(s, "value            {}", r.value);
    let _ = writeln!(s, "ew_total         {}", r.ew_component);
    let _ = writeln!(s, "ew_per_period    {}", r.ew_per_period());
    let _ = writeln!(s, "risk             {}", r.risk_component);
    let _ = writeln!(s, "kappa*risk       {}", o.kappa * r.risk_component);
    let _ = writeln!(s, "epsilon*E[W_T]   {}", sc.epsilon * r.expected_terminal_wealth);
    let _ = writeln!(s, "E[W_T]           {}", r.expected_terminal_wealth);
    let _ = writeln!(s, "residual         {:e}", r.decomposition_residual());
    if let Some(w) = r.w_star {
        let _ = writeln!(s, "w_star           {w}");
    }
    for (w, v) in &r.profile {
        let _ = writeln!(s, "profile          {w} {v}");
    }
    s
}

fn dp_rows(r: &SolveResult) -> Vec<(&'static str, f64)> {
    let mut rows = vec![
        ("dp_value", r.value),
        ("dp_ew_total", r.ew_component),
        ("dp_ew_per_period", r.ew_per_period()),
        ("dp_risk", r.risk_component),
        ("dp_expected_terminal", r.expected_terminal_wealth),
    ];
    if let Some(w) = r.w_star {
        rows.push(("w_star", w));
    }
    rows
}

fn write_stats(out: &OutputDir, rep: &mut Report, s: &SummaryStats, extra: &[(&str, f64)]) -> Result<()> {
    rep.files.push(out.write("summary.csv", &summary_csv(s, extra))?);
    rep.files.push(out.write("cdf.csv", &cdf_csv(s, CDF_POINTS))?);
    if let Some(f) = &s.fans {
        rep.files.push(out.write("percentiles.csv", &percentiles_csv(f))?);
    }
    rep.say(format!(
        "{} paths: EW/M {:.4} (se {:.4})  LS {:.5}  ES {:.3}  PS {:.4}  median W_T {:.2}",
        s.n_paths, s.ew_per_period, s.ew_per_period_se, s.ls, s.es, s.ps, s.median_terminal
    ));
    Ok(())
}

/// Solve the configured objective, store its controls and a value
/// decomposition, and evaluate it by Monte Carlo when `n_paths > 0`.
pub fn cmd_solve(cfg: &RunConfig, inv: Invocation) -> Result<Report> {
    let obj = cfg
        .objective
        .ok_or_else(|| Error::Config("solve needs an [objective] section".into()))?;
    if inv.dry_run {
        return dry_run_report(cfg, "solve");
    }
    let out = output_dir(cfg, inv)?;
    let mut rep = Report::default();
    let solver = build_solver(cfg)?;
    let r = solver.solve(&obj)?;
    rep.say(format!(
        "value {:.6}  EW/M {:.6}  risk {:.6}{}",
        r.value,
        r.ew_per_period(),
        r.risk_component,
        r.w_star.map(|w| format!("  W* {w:.4}")).unwrap_or_default()
    ));
    let controls = out.path("controls.json");
    save_controls(&r.controls, &controls)?;
    rep.files.push(controls);
    rep.files.push(out.write("decomposition.log", &decomposition_log(&r))?);
    let dp = dp_rows(&r);
    if cfg.monte_carlo.n_paths > 0 {
        let s = simulate_synthetic(
            &r.controls,
            &cfg.market,
            cfg.monte_carlo.n_paths,
            cfg.monte_carlo.seed,
            &cfg.stats_spec(obj.target),
        )?;
        write_stats(&out, &mut rep, &s, &dp)?;
    } else {
        let mut text = String::from("statistic,value\n");
        for (k, v) in dp {
            let _ = writeln!(text, "{k},{v}");
        }
        rep.files.push(out.write("summary.csv", &text)?);
    }
    Ok(rep)
}

/// Sweep `kappas` for the configured objective kind.
pub fn cmd_frontier(cfg: &RunConfig, inv: Invocation) -> Result<Report> {
    let template = cfg
        .objective
        .ok_or_else(|| Error::Config("frontier needs an [objective] section".into()))?;
    let kappas = if cfg.kappas.is_empty() {
        vec![template.kappa]
    } else {
        cfg.kappas.clone()
    };
    if inv.dry_run {
        return dry_run_report(cfg, "frontier");
    }
    if cfg.monte_carlo.n_paths == 0 {
        return Err(Error::Config("frontier needs monte_carlo.n_paths > 0".into()));
    }
    let out = output_dir(cfg, inv)?;
    let mut rep = Report::default();
    let solver = build_solver(cfg)?;
    let eval = Evaluation {
        n_paths: cfg.monte_carlo.n_paths,
        seed: cfg.monte_carlo.seed,
        stats: cfg.stats_spec(template.target),
    };
    let mut done = Vec::new();
    let mut failure: Option<Error> = None;
    let rows = sweep(&solver, &template, &kappas, &eval, |o| {
        let name = format!("points/kappa_{}.json", o.kappa);
        let body = match &o.point {
            Ok(p) => serde_json::to_string_pretty(p).unwrap_or_default(),
            Err(m) => serde_json::json!({ "kappa": o.kappa, "error": m }).to_string(),
        };
        done.push(o.clone());
        let step = out
            .write(&name, &body)
            .and_then(|_| out.write("frontier.csv", &frontier_csv(&done)));
        if let Err(e) = step {
            failure.get_or_insert(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    rep.files.push(out.path("frontier.csv"));
    for o in &rows {
        match &o.point {
            Ok(p) => rep.say(format!(
                "kappa {:<10} EW/M {:.4}  native {:.5}  LS {:.5}  ES {:.3}  PS {:.4}",
                p.kappa, p.ew_per_period, p.native_risk, p.ls, p.es, p.ps
            )),
            Err(m) => rep.say(format!("kappa {:<10} failed: {m}", o.kappa)),
        }
    }
    Ok(rep)
}

fn stats_target(cfg: &RunConfig, c: &ControlField) -> f64 {
    c.objective
        .or(cfg.objective)
        .map_or(0.0, |o| o.target)
}

/// Monte Carlo evaluation of stored (or Bengen) controls in the
/// configured market.
pub fn cmd_simulate(cfg: &RunConfig, source: &ControlSource, inv: Invocation) -> Result<Report> {
    let controls = source.load(cfg)?;
    if cfg.monte_carlo.n_paths == 0 {
        return Err(Error::Config("simulate needs monte_carlo.n_paths > 0".into()));
    }
    if inv.dry_run {
        return dry_run_report(cfg, "simulate");
    }
    let out = output_dir(cfg, inv)?;
    let mut rep = Report::default();
    let s = simulate_synthetic(
        &controls,
        &cfg.market,
        cfg.monte_carlo.n_paths,
        cfg.monte_carlo.seed,
        &cfg.stats_spec(stats_target(cfg, &controls)),
    )?;
    write_stats(&out, &mut rep, &s, &[])?;
    Ok(rep)
}

/// Load the configured bootstrap data: the returns CSV or a
/// model-generated series.
pub fn load_series(cfg: &RunConfig) -> Result<ReturnSeries> {
    let b = cfg
        .bootstrap
        .as_ref()
        .ok_or_else(|| Error::Config("bootstrap needs a [bootstrap] section".into()))?;
    match (&b.returns, b.model_months) {
        (Some(p), _) => ReturnSeries::from_csv(&cfg.resolve_path(p)),
        (None, Some(n)) => ReturnSeries::from_model(&cfg.market, n, b.model_seed),
        (None, None) => Err(Error::Config(
            "bootstrap: one of `returns` or `model_months` is required".into(),
        )),
    }
}

/// Block-bootstrap evaluation of stored (or Bengen) controls.
pub fn cmd_bootstrap(cfg: &RunConfig, source: &ControlSource, inv: Invocation) -> Result<Report> {
    let controls = source.load(cfg)?;
    let series = load_series(cfg)?;
    let b = cfg.bootstrap.as_ref().expect("checked by load_series");
    if inv.dry_run {
        let mut r = dry_run_report(cfg, "bootstrap")?;
        r.say(format!("{} months of returns from {}", series.len(), series.source));
        return Ok(r);
    }
    let out = output_dir(cfg, inv)?;
    let mut rep = Report::default();
    let s = simulate_bootstrap(
        &controls,
        &series,
        &b.spec(),
        cfg.market.mu_c_b,
        &cfg.stats_spec(stats_target(cfg, &controls)),
    )?;
    rep.say(format!(
        "blocksize {} years over {} months of {}",
        b.blocksize_years,
        series.len(),
        series.source
    ));
    write_stats(&out, &mut rep, &s, &[("blocksize_years", b.blocksize_years)])?;
    Ok(rep)
}

/// Long-format heat maps of the withdrawal and stock-fraction controls for
/// wealth in `[w_lo, w_hi]`.
pub fn cmd_export_heatmap(
    controls: &Path,
    out_dir: &Path,
    wealth_range: (f64, f64),
    inv: Invocation,
) -> Result<Report> {
    let c = load_controls(controls)?;
    let mut rep = Report::default();
    if inv.dry_run {
        rep.say(format!(
            "dry run: {} holds {} dates over {} wealth nodes",
            controls.display(),
            c.q.len(),
            c.wealth.len()
        ));
        return Ok(rep);
    }
    let out = OutputDir::prepare(out_dir, inv.force)?;
    let (q, p) = heatmap_csvs(&c, wealth_range.0, wealth_range.1);
    rep.files.push(out.write("heatmap_q.csv", &q)?);
    rep.files.push(out.write("heatmap_p.csv", &p)?);
    Ok(rep)
}

/// Evaluate several strategies on the same paths, synthetic or
/// bootstrapped.
pub fn cmd_compare(
    cfg: &RunConfig,
    sources: &[ControlSource],
    bootstrap: bool,
    inv: Invocation,
) -> Result<Report> {
    if sources.is_empty() {
        return Err(Error::Argument("compare needs at least one strategy".into()));
    }
    let strategies = sources
        .iter()
        .map(|s| Ok((s.label(), s.load(cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    let series = if bootstrap { Some(load_series(cfg)?) } else { None };
    if inv.dry_run {
        return dry_run_report(cfg, "compare");
    }
    let out = output_dir(cfg, inv)?;
    let mut rep = Report::default();
    let target = cfg.objective.map_or(0.0, |o| o.target);
    let stats = crate::simulation::StatsSpec {
        fan_paths: 0,
        ..cfg.stats_spec(target)
    };
    let mut table = format!("{COMPARE_HEADER}\n");
    for (label, c) in &strategies {
        let s = match &series {
            Some(series) => {
                let b = cfg.bootstrap.as_ref().expect("checked by load_series");
                simulate_bootstrap(c, series, &b.spec(), cfg.market.mu_c_b, &stats)?
            }
            None => simulate_synthetic(
                c,
                &cfg.market,
                cfg.monte_carlo.n_paths,
                cfg.monte_carlo.seed,
                &stats,
            )?,
        };
        let _ = writeln!(table, "{}", compare_row(label, &s));
        rep.files.push(out.write(&format!("cdf_{label}.csv"), &cdf_csv(&s, CDF_POINTS))?);
        rep.say(format!(
            "{label:<16} EW/M {:.4}  LS {:.5}  ES {:.3}  PS {:.4}",
            s.ew_per_period, s.ls, s.es, s.ps
        ));
    }
    rep.files.push(out.write("compare.csv", &table)?);
    Ok(rep)
}
