use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use decumulate::control::load_controls;
use decumulate::report::read_heatmap;

const CONFIG: &str = r#"
kappas = [5.0, 30.0]

[grid]
n_s = 32
n_b = 32

[objective]
kind = "LS"
W = 0.0
kappa = 30.0

[solver]
n_q = 7
n_p = 11

[monte_carlo]
n_paths = 2000
seed = 5
fan_paths = 500

[bootstrap]
model_months = 600
blocksize_years = 1.0
n_paths = 2000
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_decumulate"))
}

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn first_line(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    format!("{}\n", text.lines().next().unwrap())
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("run.toml"), config).unwrap();
        Workspace { dir }
    }

    fn path(&self, p: &str) -> PathBuf {
        self.dir.path().join(p)
    }

    fn run(&self, args: &[&str]) -> Output {
        bin().current_dir(self.dir.path()).args(args).output().unwrap()
    }
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "status {:?}\nstdout {}\nstderr {}",
        o.status,
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn solve_writes_documented_files() {
    let ws = Workspace::new(CONFIG);
    ok(&ws.run(&["solve", "-c", "run.toml", "-o", "out"]));
    let summary = std::fs::read_to_string(ws.path("out/summary.csv")).unwrap();
    let keys: String = summary
        .lines()
        .map(|l| format!("{}\n", l.split(',').next().unwrap()))
        .collect();
    assert_eq!(keys, golden("solve_summary_keys.txt"));
    assert_eq!(first_line(&ws.path("out/cdf.csv")), golden("cdf_header.txt"));
    assert_eq!(first_line(&ws.path("out/percentiles.csv")), golden("percentiles_header.txt"));
    let log = std::fs::read_to_string(ws.path("out/decomposition.log")).unwrap();
    assert!(log.contains("ew_per_period") && log.contains("residual"));
    let c = load_controls(&ws.path("out/controls.json")).unwrap();
    assert_eq!(c.q.len(), 30);
}

#[test]
fn dry_run_computes_nothing() {
    let ws = Workspace::new(CONFIG);
    let o = ws.run(&["solve", "-c", "run.toml", "-o", "out", "--dry-run"]);
    ok(&o);
    assert!(String::from_utf8_lossy(&o.stdout).contains("dry run"));
    assert!(!ws.path("out").exists());
}

#[test]
fn occupied_output_needs_force() {
    let ws = Workspace::new(CONFIG);
    std::fs::create_dir(ws.path("out")).unwrap();
    std::fs::write(ws.path("out/keep.txt"), "x").unwrap();
    let o = ws.run(&["simulate", "-c", "run.toml", "-o", "out", "--bengen"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!ws.path("out/summary.csv").exists());
    ok(&ws.run(&["simulate", "-c", "run.toml", "-o", "out", "--bengen", "--force"]));
    assert!(ws.path("out/summary.csv").exists());
}

#[test]
fn config_errors_name_the_key_and_exit_2() {
    let ws = Workspace::new("[scenario]\nT = 30.0\nM = 30\nW0 = 1000.0\nq_min = 30.0\nq_max = 60.0\nepsilon = 0.0\nmystery = 3\n");
    let o = ws.run(&["solve", "-c", "run.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("mystery"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn malformed_returns_exit_3_naming_the_row() {
    let ws = Workspace::new(CONFIG);
    std::fs::write(
        ws.path("returns.csv"),
        "date,stock_real_return,bond_real_return\n1990-01-31,0.01,0.001\n1990-02-28,0.02,oops\n",
    )
    .unwrap();
    let o = ws.run(&["bootstrap", "-c", "run.toml", "--bengen", "--returns", "returns.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
}

#[test]
fn failed_outer_search_exits_4() {
    let config = CONFIG.replace("kind = \"LS\"", "kind = \"ES\"").replace(
        "n_p = 11",
        "n_p = 11\nes_scan_lo = 500.0\nes_scan_hi = 900.0\nes_scan_points = 3",
    );
    let ws = Workspace::new(&config);
    let o = ws.run(&["solve", "-c", "run.toml", "-o", "out"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("W' = "));
}

#[test]
fn same_seed_same_bytes() {
    let ws = Workspace::new(CONFIG);
    ok(&ws.run(&["bootstrap", "-c", "run.toml", "-o", "a", "--bengen", "--seed", "3"]));
    ok(&ws.run(&["bootstrap", "-c", "run.toml", "-o", "b", "--bengen", "--seed", "3"]));
    ok(&ws.run(&["bootstrap", "-c", "run.toml", "-o", "c", "--bengen", "--seed", "4"]));
    let read = |d: &str| std::fs::read(ws.path(d).join("summary.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn frontier_heatmap_and_compare() {
    let ws = Workspace::new(CONFIG);
    ok(&ws.run(&["frontier", "-c", "run.toml", "-o", "fr"]));
    let frontier = std::fs::read_to_string(ws.path("fr/frontier.csv")).unwrap();
    assert_eq!(first_line(&ws.path("fr/frontier.csv")), golden("frontier_header.txt"));
    let rows: Vec<&str> = frontier.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("5,LS,ok") && rows[1].starts_with("30,LS,ok"));
    assert!(ws.path("fr/points/kappa_5.json").exists());

    ok(&ws.run(&["solve", "-c", "run.toml", "-o", "s"]));
    ok(&ws.run(&[
        "export-heatmap",
        "s/controls.json",
        "-o",
        "hm",
        "--wealth-min=-1e300",
        "--wealth-max=1e300",
    ]));
    assert_eq!(first_line(&ws.path("hm/heatmap_q.csv")), golden("heatmap_q_header.txt"));
    assert_eq!(first_line(&ws.path("hm/heatmap_p.csv")), golden("heatmap_p_header.txt"));
    let c = load_controls(&ws.path("s/controls.json")).unwrap();
    let hq = read_heatmap(&ws.path("hm/heatmap_q.csv")).unwrap();
    let hp = read_heatmap(&ws.path("hm/heatmap_p.csv")).unwrap();
    assert_eq!(hq.values, c.q);
    assert_eq!(hp.values, c.p);
    for (k, &w) in c.wealth.iter().enumerate() {
        if w <= 0.0 {
            assert!(hp.values.iter().all(|row| row[k] == 0.0));
        }
    }

    ok(&ws.run(&["compare", "-c", "run.toml", "-o", "cmp", "s/controls.json", "--bengen", "--bootstrap"]));
    let table = std::fs::read_to_string(ws.path("cmp/compare.csv")).unwrap();
    assert_eq!(first_line(&ws.path("cmp/compare.csv")), golden("compare_header.txt"));
    assert!(table.lines().nth(1).unwrap().starts_with("controls,"));
    assert!(table.lines().nth(2).unwrap().starts_with("bengen,2000,40,"));
}
