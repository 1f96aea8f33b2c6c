//! File layouts written by the command-line workflows. All files are CSV
//! with a header row; floats use shortest round-trip formatting.
//!
//! | file              | columns                                         |
//! |-------------------|-------------------------------------------------|
//! | `summary.csv`     | `statistic,value`                               |
//! | `cdf.csv`         | `x,F`                                           |
//! | `percentiles.csv` | `quantity,time,p5,p50,p95`                      |
//! | `frontier.csv`    | see [`FRONTIER_HEADER`](super::FRONTIER_HEADER) |
//! | `heatmap_q.csv`   | `time,wealth,q,q_normalized`                    |
//! | `heatmap_p.csv`   | `time,wealth,p`                                 |
//! | `compare.csv`     | see [`COMPARE_HEADER`]                          |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::atomic::write_atomic;
use crate::control::ControlField;
use crate::error::{Error, Result};
use crate::simulation::{Fans, SummaryStats};

pub const COMPARE_HEADER: &str =
    "label,n_paths,ew_per_period,ew_per_period_se,ls,ls_se,es,var,ps,ps_se,median_terminal";

/// Output directory guard: refuses to reuse a non-empty directory unless
/// `force` is set.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn prepare(root: &Path, force: bool) -> Result<Self> {
        if root.exists() {
            if !root.is_dir() {
                return Err(Error::Argument(format!(
                    "{} exists and is not a directory",
                    root.display()
                )));
            }
            let occupied = std::fs::read_dir(root)
                .map_err(|e| Error::io(root, e))?
                .next()
                .is_some();
            if occupied && !force {
                return Err(Error::Argument(format!(
                    "output directory {} is not empty; pass --force to overwrite",
                    root.display()
                )));
            }
        } else {
            std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        }
        Ok(OutputDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_atomic(&p, contents.as_bytes())?;
        Ok(p)
    }
}

pub fn summary_csv(stats: &SummaryStats, extra: &[(&str, f64)]) -> String {
    let mut out = String::from("statistic,value\n");
    for (k, v) in stats.rows().into_iter().chain(extra.iter().copied()) {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

pub fn cdf_csv(stats: &SummaryStats, max_points: usize) -> String {
    let mut out = String::from("x,F\n");
    for (x, f) in stats.cdf_points(max_points) {
        let _ = writeln!(out, "{x},{f}");
    }
    out
}

pub fn percentiles_csv(fans: &Fans) -> String {
    let mut out = String::from("quantity,time,p5,p50,p95\n");
    let mut block = |name: &str, rows: &[[f64; 3]]| {
        for (t, r) in fans.times.iter().zip(rows) {
            let _ = writeln!(out, "{name},{t},{},{},{}", r[0], r[1], r[2]);
        }
    };
    block("wealth", &fans.wealth);
    block("withdrawal", &fans.withdrawal);
    block("stock_fraction", &fans.stock_fraction);
    out
}

pub fn compare_row(label: &str, s: &SummaryStats) -> String {
    format!(
        "{label},{},{},{},{},{},{},{},{},{},{}",
        s.n_paths,
        s.ew_per_period,
        s.ew_per_period_se,
        s.ls,
        s.ls_se,
        s.es,
        s.var,
        s.ps,
        s.ps_se,
        s.median_terminal
    )
}

/// Heat-map rows for wealth nodes inside `[w_lo, w_hi]`.
pub fn heatmap_csvs(c: &ControlField, w_lo: f64, w_hi: f64) -> (String, String) {
    let sc = &c.scenario;
    let span = sc.q_max - sc.q_min;
    let mut q_out = String::from("time,wealth,q,q_normalized\n");
    let mut p_out = String::from("time,wealth,p\n");
    for i in 0..c.q.len() {
        let t = sc.time(i);
        for (k, &w) in c.wealth.iter().enumerate() {
            if w < w_lo || w > w_hi {
                continue;
            }
            let q = c.q[i][k];
            let norm = if span > 0.0 { (q - sc.q_min) / span } else { 0.0 };
            let _ = writeln!(q_out, "{t},{w},{q},{norm}");
            let _ = writeln!(p_out, "{t},{w},{}", c.p[i][k]);
        }
    }
    (q_out, p_out)
}

/// A heat map read back from its long format: `values[i][k]` at
/// `times[i]`, `wealth[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    pub times: Vec<f64>,
    pub wealth: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Parse `heatmap_q.csv` or `heatmap_p.csv`; the third column is the value.
pub fn read_heatmap(path: &Path) -> Result<HeatMap> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut times: Vec<f64> = Vec::new();
    let mut wealth: Vec<f64> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| Error::Format(format!("{}: row {line}: {e}", path.display())))?;
        let field = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Format(format!("{}: row {line}: column {j}", path.display())))
        };
        let (t, w, v) = (field(0)?, field(1)?, field(2)?);
        if times.last() != Some(&t) {
            times.push(t);
            values.push(Vec::new());
        }
        let row = values.last_mut().expect("row pushed above");
        if times.len() == 1 {
            wealth.push(w);
        } else if wealth.get(row.len()) != Some(&w) {
            return Err(Error::Format(format!(
                "{}: row {line}: wealth {w} breaks the node layout",
                path.display()
            )));
        }
        row.push(v);
    }
    if values.iter().any(|r| r.len() != wealth.len()) {
        return Err(Error::Format(format!("{}: ragged heat map", path.display())));
    }
    Ok(HeatMap {
        times,
        wealth,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{bengen_strategy, Scenario};

    #[test]
    fn refuses_occupied_directory_without_force() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x"), "1").unwrap();
        assert!(matches!(OutputDir::prepare(dir.path(), false), Err(Error::Argument(_))));
        assert!(OutputDir::prepare(dir.path(), true).is_ok());
        assert!(OutputDir::prepare(&dir.path().join("fresh"), false).is_ok());
    }

    #[test]
    fn heatmap_round_trip() {
        let c = bengen_strategy(&Scenario::base_case());
        let dir = tempfile::tempdir().unwrap();
        let (q, p) = heatmap_csvs(&c, f64::NEG_INFINITY, f64::INFINITY);
        std::fs::write(dir.path().join("q.csv"), q).unwrap();
        std::fs::write(dir.path().join("p.csv"), p).unwrap();
        let hq = read_heatmap(&dir.path().join("q.csv")).unwrap();
        let hp = read_heatmap(&dir.path().join("p.csv")).unwrap();
        assert_eq!(hq.values, c.q);
        assert_eq!(hp.values, c.p);
        assert_eq!(hp.wealth, c.wealth);
    }
}
