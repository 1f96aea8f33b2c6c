//! Scenario, objectives, admissible controls and the dynamic-programming
//! solver.

mod persist;
mod solver;
mod wealth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::GridSpec;

pub use persist::{load_controls, save_controls, CONTROL_FORMAT, CONTROL_SCHEMA_VERSION};
pub use solver::{
    rebalance_step, solve_ew_es, solve_fixed, DpSolver, RebalanceOutput, SolveResult,
    SolverOptions,
};
pub use wealth::WealthAxis;

/// Investment scenario. Withdrawals and rebalancing happen at
/// `t_i = i * dt` for `i = 0..M`; `t_M = T` is the terminal date.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "M")]
    pub rebalances: usize,
    #[serde(rename = "W0")]
    pub w0: f64,
    pub q_min: f64,
    pub q_max: f64,
    #[serde(default = "default_p_range")]
    pub p_range: [f64; 2],
    pub epsilon: f64,
    /// Mortgage-free real estate held outside the portfolio. Informational.
    #[serde(default)]
    pub real_estate: f64,
}

fn default_p_range() -> [f64; 2] {
    [0.0, 1.0]
}

impl Scenario {
    /// Thirty annual withdrawals from 1000 (thousands of real dollars),
    /// between 30 and 60 per year.
    pub fn base_case() -> Self {
        Scenario {
            horizon: 30.0,
            rebalances: 30,
            w0: 1000.0,
            q_min: 30.0,
            q_max: 60.0,
            p_range: [0.0, 1.0],
            epsilon: -1e-4,
            real_estate: 400.0,
        }
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.rebalances as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Argument("T must be positive".into()));
        }
        if self.rebalances == 0 {
            return Err(Error::Argument("M must be at least 1".into()));
        }
        if !(self.w0 > 0.0) || !self.w0.is_finite() {
            return Err(Error::Argument("W0 must be positive".into()));
        }
        if !(0.0 <= self.q_min && self.q_min <= self.q_max && self.q_max.is_finite()) {
            return Err(Error::Argument(format!(
                "need 0 <= q_min <= q_max, got [{}, {}]",
                self.q_min, self.q_max
            )));
        }
        let [p0, p1] = self.p_range;
        if !(0.0 <= p0 && p0 <= p1 && p1 <= 1.0) {
            return Err(Error::Argument(
                "p_range must satisfy 0 <= lo <= hi <= 1".into(),
            ));
        }
        if !self.epsilon.is_finite() || self.epsilon.abs() * self.q_max >= 1.0 {
            return Err(Error::Argument(
                "epsilon must be small: |epsilon| * q_max < 1".into(),
            ));
        }
        Ok(())
    }

    /// Admissible withdrawals at date index `i` for pre-withdrawal wealth `w`.
    pub fn admissible_q(&self, w_minus: f64, i: usize) -> Interval {
        if i >= self.rebalances {
            return Interval::point(0.0);
        }
        if w_minus >= self.q_max {
            Interval {
                lo: self.q_min,
                hi: self.q_max,
            }
        } else {
            Interval {
                lo: self.q_min,
                hi: self.q_min.max(w_minus),
            }
        }
    }

    /// Admissible stock fractions at date index `i` for post-withdrawal
    /// wealth `w`.
    pub fn admissible_p(&self, w_plus: f64, i: usize) -> Interval {
        if w_plus <= 0.0 || i >= self.rebalances {
            Interval::point(0.0)
        } else {
            Interval {
                lo: self.p_range[0],
                hi: self.p_range[1],
            }
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// Risk measure paired with expected withdrawals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskKind {
    /// Linear shortfall `E[min(W_T - W, 0)]`.
    LS,
    /// Probability of shortfall `Prob[W_T < W]`, entered with a minus sign.
    PS,
    /// Expected shortfall at level `alpha`.
    ES,
}

/// Scalarized objective `E[sum q] + kappa * risk + epsilon * E[W_T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub kind: RiskKind,
    /// Target wealth for LS and PS.
    #[serde(rename = "W", default)]
    pub target: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub kappa: f64,
}

fn default_alpha() -> f64 {
    0.05
}

impl ObjectiveSpec {
    pub fn linear_shortfall(target: f64, kappa: f64) -> Self {
        ObjectiveSpec {
            kind: RiskKind::LS,
            target,
            alpha: default_alpha(),
            kappa,
        }
    }

    pub fn shortfall_probability(target: f64, kappa: f64) -> Self {
        ObjectiveSpec {
            kind: RiskKind::PS,
            target,
            alpha: default_alpha(),
            kappa,
        }
    }

    pub fn expected_shortfall(alpha: f64, kappa: f64) -> Self {
        ObjectiveSpec {
            kind: RiskKind::ES,
            target: 0.0,
            alpha,
            kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::Argument(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !self.target.is_finite() {
            return Err(Error::Argument("target wealth must be finite".into()));
        }
        if self.kind == RiskKind::ES && !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Argument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Terminal reward as a function of terminal wealth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalCondition {
    pub kind: RiskKind,
    /// Target for LS and PS, candidate `W'` for ES.
    pub level: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub epsilon: f64,
}

impl TerminalCondition {
    /// The risk term before scaling by `kappa`.
    #[inline]
    pub fn risk(&self, w: f64) -> f64 {
        match self.kind {
            RiskKind::LS => (w - self.level).min(0.0),
            RiskKind::PS => {
                if w < self.level {
                    -1.0
                } else {
                    0.0
                }
            }
            RiskKind::ES => self.level + (w - self.level).min(0.0) / self.alpha,
        }
    }

    #[inline]
    pub fn value(&self, w: f64) -> f64 {
        self.kappa * self.risk(w) + self.epsilon * w
    }
}

/// Terminal condition for `obj`. ES needs the candidate `w_prime`.
pub fn terminal_condition(
    obj: &ObjectiveSpec,
    w_prime: Option<f64>,
    epsilon: f64,
) -> Result<TerminalCondition> {
    obj.validate()?;
    let level = match obj.kind {
        RiskKind::ES => w_prime.ok_or_else(|| {
            Error::Argument("expected shortfall terminal condition needs W'".into())
        })?,
        _ => obj.target,
    };
    if !level.is_finite() {
        return Err(Error::Argument("terminal level must be finite".into()));
    }
    Ok(TerminalCondition {
        kind: obj.kind,
        level,
        alpha: obj.alpha,
        kappa: obj.kappa,
        epsilon,
    })
}

/// Stored optimal controls: withdrawal over pre-withdrawal wealth and stock
/// fraction over post-withdrawal wealth, one table per rebalancing date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    /// Lattice the controls were computed on; `None` for rule-based strategies.
    pub grid: Option<GridSpec>,
    pub scenario: Scenario,
    pub objective: Option<ObjectiveSpec>,
    pub w_star: Option<f64>,
    pub n_q: usize,
    pub n_p: usize,
    /// Wealth nodes shared by all tables, strictly increasing.
    pub wealth: Vec<f64>,
    /// `q[i][k]`: withdrawal at date `i` and pre-withdrawal wealth `wealth[k]`.
    pub q: Vec<Vec<f64>>,
    /// `p[i][k]`: stock fraction at date `i` and post-withdrawal wealth `wealth[k]`.
    pub p: Vec<Vec<f64>>,
}

impl ControlField {
    /// Check shapes, ordering and admissibility of every stored control.
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let m = self.scenario.rebalances;
        let n = self.wealth.len();
        if n < 2 {
            return Err(Error::Format("wealth axis needs at least two nodes".into()));
        }
        if self.wealth.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Format("wealth axis must be strictly increasing".into()));
        }
        if self.q.len() != m || self.p.len() != m {
            return Err(Error::Format(format!(
                "expected {m} control dates, found {} q and {} p tables",
                self.q.len(),
                self.p.len()
            )));
        }
        for i in 0..m {
            if self.q[i].len() != n || self.p[i].len() != n {
                return Err(Error::Format(format!("table {i} does not match wealth axis")));
            }
            for (k, &w) in self.wealth.iter().enumerate() {
                let zq = self.scenario.admissible_q(w, i);
                let zp = self.scenario.admissible_p(w, i);
                let (q, p) = (self.q[i][k], self.p[i][k]);
                if !(zq.lo - 1e-9 <= q && q <= zq.hi + 1e-9) {
                    return Err(Error::Format(format!(
                        "withdrawal {q} at date {i}, wealth {w} is not admissible"
                    )));
                }
                if !(zp.lo - 1e-12 <= p && p <= zp.hi + 1e-12) {
                    return Err(Error::Format(format!(
                        "stock fraction {p} at date {i}, wealth {w} is not admissible"
                    )));
                }
            }
        }
        Ok(())
    }

    fn lookup(&self, table: &[f64], w: f64) -> f64 {
        let xs = &self.wealth;
        let n = xs.len();
        if w <= xs[0] {
            return table[0];
        }
        if w >= xs[n - 1] {
            return table[n - 1];
        }
        let k = xs.partition_point(|&x| x <= w) - 1;
        let t = (w - xs[k]) / (xs[k + 1] - xs[k]);
        table[k] + t * (table[k + 1] - table[k])
    }

    /// Withdrawal at date `i`, interpolated and clamped into the admissible set.
    pub fn q_at(&self, i: usize, w_minus: f64) -> f64 {
        let zq = self.scenario.admissible_q(w_minus, i);
        if i >= self.q.len() {
            return zq.lo;
        }
        zq.clamp(self.lookup(&self.q[i], w_minus))
    }

    /// Stock fraction at date `i`, interpolated and clamped into the
    /// admissible set.
    pub fn p_at(&self, i: usize, w_plus: f64) -> f64 {
        let zp = self.scenario.admissible_p(w_plus, i);
        if i >= self.p.len() {
            return zp.lo;
        }
        zp.clamp(self.lookup(&self.p[i], w_plus))
    }

    /// Withdrawal step of the control discretization.
    pub fn q_step(&self) -> f64 {
        if self.n_q > 1 {
            (self.scenario.q_max - self.scenario.q_min) / (self.n_q - 1) as f64
        } else {
            0.0
        }
    }
}

/// Withdraw `0.04 * W0` every year and hold half in stocks.
pub fn bengen_strategy(scenario: &Scenario) -> ControlField {
    let q = 0.04 * scenario.w0;
    let mut fixed = *scenario;
    fixed.q_min = q;
    fixed.q_max = q;
    let wealth = vec![-1e12, 0.0, 1e-9, 1e12];
    let m = scenario.rebalances;
    let p_row = vec![0.0, 0.0, 0.5, 0.5];
    ControlField {
        grid: None,
        scenario: fixed,
        objective: None,
        w_star: None,
        n_q: 1,
        n_p: 1,
        q: vec![vec![q; wealth.len()]; m],
        p: vec![p_row; m],
        wealth,
    }
}
