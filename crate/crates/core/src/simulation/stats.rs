use serde::Serialize;

use crate::error::{Error, Result};

/// Percentile bands over time: `[p5, p50, p95]` per date.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fans {
    /// Dates of the wealth band, `t_0 .. t_M`.
    pub times: Vec<f64>,
    /// Wealth before the withdrawal at each date; the last entry is `W_T`.
    pub wealth: Vec<[f64; 3]>,
    /// Stock fraction after the withdrawal, `t_0 .. t_{M-1}`.
    pub stock_fraction: Vec<[f64; 3]>,
    /// Withdrawal, `t_0 .. t_{M-1}`.
    pub withdrawal: Vec<[f64; 3]>,
    /// Number of paths the bands were computed from.
    pub paths: usize,
}

/// Reward and risk statistics of simulated terminal wealth and withdrawals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n_paths: usize,
    pub rebalances: usize,
    pub alpha: f64,
    pub target: f64,
    /// `E[sum q]`.
    pub ew_total: f64,
    /// `E[sum q] / M`.
    pub ew_per_period: f64,
    pub ew_per_period_se: f64,
    /// `E[min(W_T - W, 0)]`.
    pub ls: f64,
    pub ls_se: f64,
    /// Mean of the worst `ceil(alpha N)` terminal wealths.
    pub es: f64,
    /// `alpha`-quantile of terminal wealth (the `ceil(alpha N)`-th smallest).
    pub var: f64,
    /// `Prob[W_T < W]`.
    pub ps: f64,
    pub ps_se: f64,
    pub mean_terminal: f64,
    pub median_terminal: f64,
    /// Share of path-dates with a withdrawal strictly inside the band
    /// `(q_min + d, q_max - d)`, `d` being one control step.
    pub interior_q_fraction: Option<f64>,
    #[serde(skip)]
    pub sorted_terminal: Vec<f64>,
    #[serde(skip)]
    pub fans: Option<Fans>,
}

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

/// Statistics of terminal wealth `terminal` and total withdrawals
/// `withdrawals` (one entry per path) over `rebalances` withdrawal dates.
pub fn summary(
    terminal: &[f64],
    withdrawals: &[f64],
    alpha: f64,
    target: f64,
    rebalances: usize,
) -> Result<SummaryStats> {
    let n = terminal.len();
    if n == 0 || withdrawals.len() != n {
        return Err(Error::Argument(
            "summary needs one withdrawal total per terminal wealth".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if alpha * (n as f64) < 1.0 {
        return Err(Error::Argument(format!(
            "alpha * N = {} < 1: too few samples for the tail",
            alpha * n as f64
        )));
    }
    if terminal.iter().chain(withdrawals).any(|v| !v.is_finite()) {
        return Err(Error::Argument("samples must be finite".into()));
    }
    let m = rebalances.max(1) as f64;
    let (ew_total, ew_se) = mean_and_se(withdrawals.iter().copied(), n);
    let (ls, ls_se) = mean_and_se(terminal.iter().map(|&w| (w - target).min(0.0)), n);
    let (ps, ps_se) = mean_and_se(
        terminal.iter().map(|&w| if w < target { 1.0 } else { 0.0 }),
        n,
    );
    let mean_terminal = terminal.iter().sum::<f64>() / n as f64;
    let mut sorted = terminal.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((alpha * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let es = sorted[..k].iter().sum::<f64>() / k as f64;
    let var = sorted[k - 1];
    Ok(SummaryStats {
        n_paths: n,
        rebalances,
        alpha,
        target,
        ew_total,
        ew_per_period: ew_total / m,
        ew_per_period_se: ew_se / m,
        ls,
        ls_se,
        es,
        var,
        ps,
        ps_se,
        mean_terminal,
        median_terminal: quantile_sorted(&sorted, 0.5),
        interior_q_fraction: None,
        sorted_terminal: sorted,
        fans: None,
    })
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = prob.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl SummaryStats {
    /// Empirical CDF `F(x) = #{W_T <= x} / N` at up to `max_points`
    /// evenly spaced ranks (always including the extremes).
    pub fn cdf_points(&self, max_points: usize) -> Vec<(f64, f64)> {
        let xs = &self.sorted_terminal;
        let n = xs.len();
        if n == 0 {
            return Vec::new();
        }
        let count = max_points.clamp(2, n.max(2));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(count);
        for j in 0..count {
            let rank = if count == 1 {
                n - 1
            } else {
                ((j as f64 / (count - 1) as f64) * (n - 1) as f64).round() as usize
            };
            let x = xs[rank.min(n - 1)];
            let f = xs.partition_point(|&v| v <= x) as f64 / n as f64;
            if out.last().is_none_or(|last| last.0 < x) {
                out.push((x, f));
            }
        }
        out
    }

    /// Empirical CDF at `x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        self.sorted_terminal.partition_point(|&v| v <= x) as f64 / self.sorted_terminal.len() as f64
    }

    /// `Prob[W_T < x]`.
    pub fn prob_below(&self, x: f64) -> f64 {
        self.sorted_terminal.partition_point(|&v| v < x) as f64 / self.sorted_terminal.len() as f64
    }

    /// Largest gap between this empirical CDF and `other`'s, restricted to
    /// `x <= upper`.
    pub fn cdf_distance(&self, other: &SummaryStats, upper: f64) -> f64 {
        let mut d: f64 = 0.0;
        for x in self.sorted_terminal.iter().chain(&other.sorted_terminal) {
            if *x > upper {
                continue;
            }
            d = d.max((self.cdf_at(*x) - other.cdf_at(*x)).abs());
        }
        d
    }

    /// `(statistic, value)` rows in a fixed order.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        let mut rows = vec![
            ("n_paths", self.n_paths as f64),
            ("rebalances", self.rebalances as f64),
            ("alpha", self.alpha),
            ("target", self.target),
            ("ew_total", self.ew_total),
            ("ew_per_period", self.ew_per_period),
            ("ew_per_period_se", self.ew_per_period_se),
            ("ls", self.ls),
            ("ls_se", self.ls_se),
            ("es", self.es),
            ("var", self.var),
            ("ps", self.ps),
            ("ps_se", self.ps_se),
            ("mean_terminal", self.mean_terminal),
            ("median_terminal", self.median_terminal),
        ];
        if let Some(f) = self.interior_q_fraction {
            rows.push(("interior_q_fraction", f));
        }
        rows
    }
}
