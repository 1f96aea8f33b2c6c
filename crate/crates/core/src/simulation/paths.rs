use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::stats::{quantile_sorted, summary, Fans, SummaryStats};
use crate::control::ControlField;
use crate::error::{Error, Result};

/// Reporting settings shared by all forward simulations.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSpec {
    /// Tail level for ES and VaR.
    pub alpha: f64,
    /// Target wealth for LS and PS.
    pub target: f64,
    /// Number of leading paths used for percentile bands; 0 disables them.
    pub fan_paths: usize,
}

impl Default for StatsSpec {
    fn default() -> Self {
        StatsSpec {
            alpha: 0.05,
            target: 0.0,
            fan_paths: 50_000,
        }
    }
}

/// Independent random stream for path `path` under `seed`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

struct PathOutcome {
    terminal: f64,
    withdrawals: f64,
    interior: u32,
    trace: Option<Vec<(f64, f64, f64)>>,
}

/// Run `n_paths` forward paths under `controls`.
///
/// `make_path(k)` returns the period growth source for path `k`; it is
/// called with the period index and whether the path is insolvent, and
/// returns the gross growth factors `(stock, bond)` over that period. For
/// insolvent paths the bond factor must already include the borrowing
/// spread. Paths are independent and reduced in index order, so results do
/// not depend on the thread count.
pub fn run_paths<P, F>(
    controls: &ControlField,
    n_paths: usize,
    stats: &StatsSpec,
    make_path: P,
) -> Result<SummaryStats>
where
    P: Fn(u64) -> F + Sync,
    F: FnMut(usize, bool) -> (f64, f64),
{
    if n_paths == 0 {
        return Err(Error::Argument("need at least one path".into()));
    }
    let sc = controls.scenario;
    let m = sc.rebalances;
    if controls.q.len() < m || controls.p.len() < m {
        return Err(Error::Argument(format!(
            "controls cover {} dates, scenario needs {m}",
            controls.q.len().min(controls.p.len())
        )));
    }
    let delta = controls.q_step();
    let band = (sc.q_min + delta, sc.q_max - delta);
    let fan_paths = stats.fan_paths.min(n_paths);

    let outcomes: Vec<PathOutcome> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut growth = make_path(k as u64);
            let mut trace = (k < fan_paths).then(|| Vec::with_capacity(m + 1));
            let mut w = sc.w0;
            let mut total = 0.0;
            let mut interior = 0;
            for i in 0..m {
                let q = controls.q_at(i, w);
                total += q;
                if q > band.0 && q < band.1 {
                    interior += 1;
                }
                let w_plus = w - q;
                let p = controls.p_at(i, w_plus);
                if let Some(t) = trace.as_mut() {
                    t.push((w, q, p));
                }
                w = if w_plus > 0.0 {
                    let (gs, gb) = growth(i, false);
                    p * w_plus * gs + (1.0 - p) * w_plus * gb
                } else {
                    let (_, gb) = growth(i, true);
                    w_plus * gb
                };
            }
            if let Some(t) = trace.as_mut() {
                t.push((w, 0.0, 0.0));
            }
            PathOutcome {
                terminal: w,
                withdrawals: total,
                interior,
                trace,
            }
        })
        .collect();

    let terminal: Vec<f64> = outcomes.iter().map(|o| o.terminal).collect();
    let withdrawals: Vec<f64> = outcomes.iter().map(|o| o.withdrawals).collect();
    let interior: u64 = outcomes.iter().map(|o| o.interior as u64).sum();
    let mut s = summary(&terminal, &withdrawals, stats.alpha, stats.target, m)?;
    s.interior_q_fraction = Some(interior as f64 / (n_paths * m) as f64);
    if fan_paths > 0 {
        s.fans = Some(fans(&outcomes[..fan_paths], &sc, m));
    }
    Ok(s)
}

fn fans(outcomes: &[PathOutcome], sc: &crate::control::Scenario, m: usize) -> Fans {
    let band = |mut xs: Vec<f64>| {
        xs.sort_by(f64::total_cmp);
        [
            quantile_sorted(&xs, 0.05),
            quantile_sorted(&xs, 0.5),
            quantile_sorted(&xs, 0.95),
        ]
    };
    let column = |i: usize, pick: fn(&(f64, f64, f64)) -> f64| -> Vec<f64> {
        outcomes
            .iter()
            .map(|o| pick(&o.trace.as_ref().expect("fan path keeps its trace")[i]))
            .collect()
    };
    Fans {
        times: (0..=m).map(|i| sc.time(i)).collect(),
        wealth: (0..=m).map(|i| band(column(i, |t| t.0))).collect(),
        withdrawal: (0..m).map(|i| band(column(i, |t| t.1))).collect(),
        stock_fraction: (0..m).map(|i| band(column(i, |t| t.2))).collect(),
        paths: outcomes.len(),
    }
}
