//! The command workflows driven from a TOML run configuration, as the
//! `decumulate` binary does.

use decumulate::report::{cmd_export_heatmap, cmd_simulate, cmd_solve, ControlSource, Invocation, RunConfig};

const CONFIG: &str = r#"
kappas = [10.0, 30.0]

[scenario]
T = 30.0
M = 30
W0 = 1000.0
q_min = 30.0
q_max = 60.0
epsilon = -1e-4

[grid]
n_s = 64
n_b = 64

[objective]
kind = "LS"
W = 0.0
kappa = 30.0

[monte_carlo]
n_paths = 20000
seed = 1
"#;

fn main() -> decumulate::Result<()> {
    let root = std::env::temp_dir().join("decumulate_run_config");
    let mut cfg = RunConfig::from_toml_str(CONFIG)?;
    let inv = Invocation { force: true, dry_run: false };

    cfg.output_dir = Some(root.join("solve"));
    for line in cmd_solve(&cfg, inv)?.lines {
        println!("solve: {line}");
    }
    let controls = root.join("solve").join("controls.json");

    cfg.output_dir = Some(root.join("bengen"));
    for line in cmd_simulate(&cfg, &ControlSource::Bengen, inv)?.lines {
        println!("bengen: {line}");
    }

    let rep = cmd_export_heatmap(&controls, &root.join("heatmap"), (0.0, 3000.0), inv)?;
    for f in rep.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
