use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use decumulate::report::{
    cmd_bootstrap, cmd_compare, cmd_export_heatmap, cmd_frontier, cmd_simulate, cmd_solve,
    ControlSource, Invocation, Overrides, Report, RunConfig,
};
use decumulate::Error;

/// Optimal decumulation: solve, sweep, simulate and compare withdrawal strategies.
#[derive(Parser)]
#[command(name = "decumulate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Nodes per lattice axis (power of two).
    #[arg(long)]
    grid: Option<usize>,
    /// Monte Carlo or bootstrap path count.
    #[arg(long)]
    paths: Option<usize>,
    /// Expected bootstrap block length in years.
    #[arg(long)]
    blocksize: Option<f64>,
    /// Overwrite files in a non-empty output directory.
    #[arg(long)]
    force: bool,
    /// Validate inputs only.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct Strategy {
    /// Control file written by `solve`.
    #[arg(long, required_unless_present = "bengen", conflicts_with = "bengen")]
    controls: Option<PathBuf>,
    /// Use the constant 4% withdrawal, 50% stock rule instead.
    #[arg(long)]
    bengen: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured objective and store its controls.
    Solve(Common),
    /// Sweep the configured kappas and write frontier.csv.
    Frontier(Common),
    /// Monte Carlo evaluation in the parametric market.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        strategy: Strategy,
    },
    /// Block-bootstrap evaluation on monthly return data.
    Bootstrap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        strategy: Strategy,
        /// Returns CSV (overrides `bootstrap.returns`).
        #[arg(long)]
        returns: Option<PathBuf>,
    },
    /// Write heatmap_q.csv and heatmap_p.csv for a control file.
    ExportHeatmap {
        controls: PathBuf,
        #[arg(short, long, default_value = "decumulate-out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        wealth_min: f64,
        #[arg(long, default_value_t = 3000.0)]
        wealth_max: f64,
        #[arg(long)]
        force: bool,
        #[arg(long)]
        dry_run: bool,
    },
    /// Evaluate several strategies side by side.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Control files to compare.
        controls: Vec<PathBuf>,
        /// Include the Bengen rule.
        #[arg(long)]
        bengen: bool,
        /// Use block-bootstrap paths instead of the parametric market.
        #[arg(long)]
        bootstrap: bool,
    },
}

fn load(common: &Common) -> decumulate::Result<(RunConfig, Invocation)> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        grid: common.grid,
        n_paths: common.paths,
        blocksize_years: common.blocksize,
        output_dir: common.out.clone(),
    })?;
    let inv = Invocation {
        force: common.force,
        dry_run: common.dry_run,
    };
    Ok((cfg, inv))
}

fn source(s: &Strategy) -> ControlSource {
    match &s.controls {
        Some(p) if !s.bengen => ControlSource::File(p.clone()),
        _ => ControlSource::Bengen,
    }
}

fn run(cli: Cli) -> decumulate::Result<Report> {
    match cli.command {
        Command::Solve(c) => {
            let (cfg, inv) = load(&c)?;
            cmd_solve(&cfg, inv)
        }
        Command::Frontier(c) => {
            let (cfg, inv) = load(&c)?;
            cmd_frontier(&cfg, inv)
        }
        Command::Simulate { common, strategy } => {
            let (cfg, inv) = load(&common)?;
            cmd_simulate(&cfg, &source(&strategy), inv)
        }
        Command::Bootstrap {
            common,
            strategy,
            returns,
        } => {
            let (mut cfg, inv) = load(&common)?;
            if let Some(r) = returns {
                let b = cfg.bootstrap.as_mut().ok_or_else(|| {
                    Error::Config("--returns needs a [bootstrap] section".into())
                })?;
                b.returns = Some(r);
                b.model_months = None;
                cfg.validate()?;
            }
            cmd_bootstrap(&cfg, &source(&strategy), inv)
        }
        Command::ExportHeatmap {
            controls,
            out,
            wealth_min,
            wealth_max,
            force,
            dry_run,
        } => cmd_export_heatmap(
            &controls,
            &out,
            (wealth_min, wealth_max),
            Invocation { force, dry_run },
        ),
        Command::Compare {
            common,
            controls,
            bengen,
            bootstrap,
        } => {
            let (cfg, inv) = load(&common)?;
            let mut sources: Vec<ControlSource> =
                controls.into_iter().map(ControlSource::File).collect();
            if bengen {
                sources.push(ControlSource::Bengen);
            }
            cmd_compare(&cfg, &sources, bootstrap, inv)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Bracket { profile, .. } = &e {
                for (w, v) in profile {
                    eprintln!("  W' = {w}: {v}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
