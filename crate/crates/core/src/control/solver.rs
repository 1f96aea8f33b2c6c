use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{terminal_condition, ControlField, ObjectiveSpec, RiskKind, Scenario, WealthAxis};
use crate::error::{Error, Result};
use crate::lattice::{build_grid, GridSpec, StateGrid, ValueField};
use crate::market::MarketParams;
use crate::pide::{advance_many, build_green, GreensFunction};

/// Control discretization and outer-search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Withdrawal values spanning `[q_min, q_max]`.
    pub n_q: usize,
    /// Stock-fraction values spanning the allowed range.
    pub n_p: usize,
    /// Coarse scan range for `W'`; defaults to `[-W0, W0]`.
    pub es_scan_lo: Option<f64>,
    pub es_scan_hi: Option<f64>,
    pub es_scan_points: usize,
    /// Final bracket width of the golden-section refinement.
    pub es_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            n_q: 61,
            n_p: 101,
            es_scan_lo: None,
            es_scan_hi: None,
            es_scan_points: 21,
            es_tolerance: 1e-3,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        if self.n_q == 0 || (self.n_q == 1 && scenario.q_min != scenario.q_max) {
            return Err(Error::Argument(
                "n_q must be at least 2 when q_min < q_max".into(),
            ));
        }
        if self.n_p < 2 && scenario.p_range[0] != scenario.p_range[1] {
            return Err(Error::Argument("n_p must be at least 2".into()));
        }
        if self.es_scan_points < 3 {
            return Err(Error::Argument("es_scan_points must be at least 3".into()));
        }
        if !(self.es_tolerance > 0.0) {
            return Err(Error::Argument("es_tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Same options with the withdrawal and allocation resolution doubled.
    pub fn refined(&self) -> Self {
        SolverOptions {
            n_q: 2 * self.n_q - 1,
            n_p: 2 * self.n_p - 1,
            ..*self
        }
    }
}

/// Outcome of a backward solve, evaluated at `W0` before the first withdrawal.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub objective: ObjectiveSpec,
    /// `ew_component + kappa * risk_component + epsilon * expected_terminal_wealth`.
    pub value: f64,
    /// Expected total withdrawals.
    pub ew_component: f64,
    /// Expected risk term: `E[min(W_T - W, 0)]`, `-Prob[W_T < W]`, or
    /// `W' + E[min(W_T - W', 0)] / alpha`.
    pub risk_component: f64,
    pub expected_terminal_wealth: f64,
    pub controls: ControlField,
    pub w_star: Option<f64>,
    /// Value over the wealth axis just before each withdrawal date.
    pub value_tables: Vec<Vec<f64>>,
    /// `(W', value)` pairs visited by the outer search (ES only).
    pub profile: Vec<(f64, f64)>,
}

impl SolveResult {
    pub fn ew_per_period(&self) -> f64 {
        self.ew_component / self.controls.scenario.rebalances as f64
    }

    /// Decomposition residual `value - (ew + kappa * risk + epsilon * E[W_T])`.
    pub fn decomposition_residual(&self) -> f64 {
        let rebuilt = self.ew_component
            + self.objective.kappa * self.risk_component
            + self.controls.scenario.epsilon * self.expected_terminal_wealth;
        self.value - rebuilt
    }
}

/// Nodal values over the wealth axis after a rebalancing step, one vector
/// per input field, plus the maximizing controls.
#[derive(Debug, Clone)]
pub struct RebalanceOutput {
    pub values: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl RebalanceOutput {
    pub fn v_minus(&self) -> &[f64] {
        &self.values[0]
    }
}

/// Backward dynamic-programming solver for one market, scenario and lattice.
#[derive(Debug, Clone)]
pub struct DpSolver {
    pub market: MarketParams,
    pub scenario: Scenario,
    pub grid: Arc<StateGrid>,
    pub green: Arc<GreensFunction>,
    pub options: SolverOptions,
    pub axis: WealthAxis,
    solvent_brackets: Vec<(u32, f64)>,
    insolvent_brackets: Vec<(u32, f64)>,
}

impl DpSolver {
    pub fn new(
        market: MarketParams,
        scenario: Scenario,
        spec: GridSpec,
        options: SolverOptions,
    ) -> Result<Self> {
        scenario.validate()?;
        let green = build_green(&market, spec, scenario.dt())?;
        Self::with_green(market, scenario, Arc::new(green), options)
    }

    /// Reuse precomputed transition weights.
    pub fn with_green(
        market: MarketParams,
        scenario: Scenario,
        green: Arc<GreensFunction>,
        options: SolverOptions,
    ) -> Result<Self> {
        scenario.validate()?;
        options.validate(&scenario)?;
        market.validate()?;
        if (green.dt - scenario.dt()).abs() > 1e-12 * scenario.dt() {
            return Err(Error::Argument(format!(
                "transition weights span {} years, rebalancing interval is {}",
                green.dt,
                scenario.dt()
            )));
        }
        let grid = Arc::new(build_grid(green.spec)?);
        let axis = wealth_axis(&scenario, &grid, &options)?;
        let mut solvent_brackets = Vec::with_capacity(grid.len());
        for &s in &grid.s_axis.nodes {
            for &b in &grid.b_axis.nodes {
                let (k, t) = axis.locate(s + b);
                solvent_brackets.push((k as u32, t));
            }
        }
        let insolvent_brackets = grid
            .b_axis
            .nodes
            .iter()
            .map(|&b| {
                let (k, t) = axis.locate(-b);
                (k as u32, t)
            })
            .collect();
        Ok(DpSolver {
            market,
            scenario,
            grid,
            green,
            options,
            axis,
            solvent_brackets,
            insolvent_brackets,
        })
    }

    /// Same market, lattice and weights with different scenario or options.
    pub fn reconfigure(&self, scenario: Scenario, options: SolverOptions) -> Result<Self> {
        Self::with_green(self.market, scenario, self.green.clone(), options)
    }

    /// Lift a function of total wealth, given on the axis, to the lattice.
    pub fn expand(&self, values: &[f64], time_label: f64) -> ValueField {
        let n_b = self.grid.n_b();
        let lerp = |(k, t): (u32, f64)| {
            let k = k as usize;
            if t == 0.0 {
                values[k]
            } else {
                values[k] + t * (values[k + 1] - values[k])
            }
        };
        let solvent: Vec<f64> = self.solvent_brackets.iter().map(|&br| lerp(br)).collect();
        let row: Vec<f64> = self.insolvent_brackets.iter().map(|&br| lerp(br)).collect();
        let mut insolvent = Vec::with_capacity(solvent.len());
        for _ in 0..self.grid.n_s() {
            insolvent.extend_from_slice(&row[..n_b]);
        }
        ValueField {
            solvent,
            insolvent,
            time_label,
        }
    }

    /// Backward induction for a fixed terminal condition.
    pub fn solve_fixed(&self, obj: &ObjectiveSpec, w_prime: Option<f64>) -> Result<SolveResult> {
        let sc = &self.scenario;
        let term = terminal_condition(obj, w_prime, sc.epsilon)?;
        let m = sc.rebalances;
        let nodes = &self.axis.nodes;
        let mut value: Vec<f64> = nodes.iter().map(|&w| term.value(w)).collect();
        let mut ew = vec![0.0; nodes.len()];
        let mut risk: Vec<f64> = nodes.iter().map(|&w| term.risk(w)).collect();
        let mut wt: Vec<f64> = nodes.clone();
        let mut q_tables = vec![Vec::new(); m];
        let mut p_tables = vec![Vec::new(); m];
        let mut value_tables = vec![Vec::new(); m];

        for i in (0..m).rev() {
            let t_next = sc.time(i + 1);
            let lifted = [
                self.expand(&value, t_next),
                self.expand(&ew, t_next),
                self.expand(&risk, t_next),
                self.expand(&wt, t_next),
            ];
            let refs: Vec<&ValueField> = lifted.iter().collect();
            let advanced = advance_many(&refs, &self.green)?;
            drop(lifted);
            let adv_refs: Vec<&ValueField> = advanced.iter().collect();
            let out = rebalance_fields(
                &self.grid,
                &self.axis,
                &adv_refs,
                &[true, true, false, false],
                i,
                sc,
                &self.options,
            )?;
            let mut vals = out.values.into_iter();
            value = vals.next().expect("value");
            ew = vals.next().expect("ew");
            risk = vals.next().expect("risk");
            wt = vals.next().expect("wt");
            if value.iter().any(|v| !v.is_finite()) {
                return Err(Error::Resolution(format!(
                    "non-finite value at date index {i}"
                )));
            }
            q_tables[i] = out.q;
            p_tables[i] = out.p;
            value_tables[i] = value.clone();
        }

        let at = |v: &[f64]| self.axis.interpolate(v, sc.w0);
        let controls = ControlField {
            grid: Some(self.grid.spec),
            scenario: *sc,
            objective: Some(*obj),
            w_star: w_prime,
            n_q: self.options.n_q,
            n_p: self.options.n_p,
            wealth: nodes.clone(),
            q: q_tables,
            p: p_tables,
        };
        Ok(SolveResult {
            objective: *obj,
            value: at(&value),
            ew_component: at(&ew),
            risk_component: at(&risk),
            expected_terminal_wealth: at(&wt),
            controls,
            w_star: w_prime,
            value_tables,
            profile: Vec::new(),
        })
    }

    /// Expected withdrawals plus `kappa` times expected shortfall at level
    /// `alpha`, maximized jointly over controls and the candidate `W'`.
    pub fn solve_ew_es(&self, alpha: f64, kappa: f64) -> Result<SolveResult> {
        let obj = ObjectiveSpec::expected_shortfall(alpha, kappa);
        obj.validate()?;
        let lo = self.options.es_scan_lo.unwrap_or(-self.scenario.w0);
        let hi = self.options.es_scan_hi.unwrap_or(self.scenario.w0);
        if !(lo < hi) {
            return Err(Error::Argument("ES scan range is empty".into()));
        }
        let n = self.options.es_scan_points;
        let step = (hi - lo) / (n - 1) as f64;
        let mut profile = Vec::new();
        let mut best: Option<SolveResult> = None;
        let mut consider = |w: f64, profile: &mut Vec<(f64, f64)>| -> Result<f64> {
            let r = self.solve_fixed(&obj, Some(w))?;
            let v = r.value;
            profile.push((w, v));
            if best.as_ref().is_none_or(|b| v > b.value) {
                best = Some(r);
            }
            Ok(v)
        };
        let mut scan = Vec::with_capacity(n);
        for j in 0..n {
            let w = lo + j as f64 * step;
            scan.push(consider(w, &mut profile)?);
        }
        let mut j_best = 0;
        for j in 1..n {
            if scan[j] > scan[j_best] {
                j_best = j;
            }
        }
        if j_best == 0 || j_best == n - 1 {
            return Err(Error::Bracket {
                message: format!(
                    "maximum over W' at the edge of [{lo}, {hi}]; widen the scan range"
                ),
                profile,
            });
        }
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo + (j_best - 1) as f64 * step, lo + (j_best + 1) as f64 * step);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = consider(c, &mut profile)?;
        let mut fd = consider(d, &mut profile)?;
        while b - a > self.options.es_tolerance {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = consider(c, &mut profile)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = consider(d, &mut profile)?;
            }
        }
        let mut result = best.expect("scan evaluated at least one point");
        profile.sort_by(|x, y| x.0.total_cmp(&y.0));
        result.profile = profile;
        Ok(result)
    }

    /// Dispatch on the objective kind: fixed-target objectives solve once,
    /// expected shortfall runs the outer search.
    pub fn solve(&self, obj: &ObjectiveSpec) -> Result<SolveResult> {
        match obj.kind {
            RiskKind::ES => self.solve_ew_es(obj.alpha, obj.kappa),
            _ => self.solve_fixed(obj, None),
        }
    }
}

fn wealth_axis(sc: &Scenario, grid: &StateGrid, opts: &SolverOptions) -> Result<WealthAxis> {
    let h = if sc.q_max > sc.q_min && opts.n_q > 1 {
        (sc.q_max - sc.q_min) / (opts.n_q - 1) as f64
    } else {
        sc.w0 / 2000.0
    };
    let spec = &grid.spec;
    let ratio = (0.5 * spec.d_log_s().min(spec.d_log_b())).exp();
    WealthAxis::new(
        h,
        -2.0 * sc.w0,
        4.0 * sc.w0,
        spec.b_max,
        spec.s_max + spec.b_max,
        ratio,
    )
}

fn withdrawal_candidates(sc: &Scenario, opts: &SolverOptions, w_minus: f64, i: usize, out: &mut Vec<f64>) {
    out.clear();
    let zq = sc.admissible_q(w_minus, i);
    if zq.hi <= zq.lo || opts.n_q < 2 {
        out.push(zq.lo);
        return;
    }
    let h = (sc.q_max - sc.q_min) / (opts.n_q - 1) as f64;
    let tol = 1e-9 * zq.hi.abs().max(1.0);
    for j in 0..opts.n_q {
        let q = if j == opts.n_q - 1 {
            sc.q_max
        } else {
            sc.q_min + j as f64 * h
        };
        if q > zq.hi + tol {
            break;
        }
        out.push(q.min(zq.hi));
    }
    if zq.hi - out.last().copied().unwrap_or(zq.lo) > tol {
        out.push(zq.hi);
    }
}

/// Optimize the withdrawal and the stock fraction at date index `i`.
///
/// `fields[0]` is the value at `t_i^+` and drives the argmax; the other
/// fields are carried along at the same maximizer. `adds_q[f]` marks fields
/// that accumulate the withdrawal itself.
fn rebalance_fields(
    grid: &StateGrid,
    axis: &WealthAxis,
    fields: &[&ValueField],
    adds_q: &[bool],
    i: usize,
    sc: &Scenario,
    opts: &SolverOptions,
) -> Result<RebalanceOutput> {
    if fields.is_empty() || fields.len() != adds_q.len() {
        return Err(Error::Argument("rebalance needs one flag per field".into()));
    }
    for f in fields {
        if f.solvent.len() != grid.len() || f.insolvent.len() != grid.len() {
            return Err(Error::Argument("field shape does not match grid".into()));
        }
    }
    let nf = fields.len();
    let n = axis.len();
    let [p_lo, p_hi] = sc.p_range;
    let n_p = if p_hi > p_lo { opts.n_p.max(2) } else { 1 };
    let p_values: Vec<f64> = (0..n_p)
        .map(|j| {
            if j == n_p - 1 {
                p_hi
            } else {
                p_lo + j as f64 * (p_hi - p_lo) / (n_p - 1).max(1) as f64
            }
        })
        .collect();
    let ln = |x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
    let ln_p: Vec<f64> = p_values.iter().map(|&p| ln(p)).collect();
    let ln_1mp: Vec<f64> = p_values.iter().map(|&p| ln(1.0 - p)).collect();

    // Stage one: best stock fraction for every post-withdrawal wealth node.
    let stage_one: Vec<(f64, Vec<f64>)> = axis
        .nodes
        .par_iter()
        .map(|&w| {
            let mut h = vec![0.0; nf];
            if w > 0.0 && i < sc.rebalances {
                let lw = w.ln();
                let mut best = f64::NEG_INFINITY;
                let mut best_j = 0;
                for j in 0..n_p {
                    let st = grid.weights(ln_p[j] + lw, ln_1mp[j] + lw);
                    let v = st.apply(&fields[0].solvent);
                    if v > best {
                        best = v;
                        best_j = j;
                    }
                }
                let st = grid.weights(ln_p[best_j] + lw, ln_1mp[best_j] + lw);
                for (f, hf) in fields.iter().zip(h.iter_mut()) {
                    *hf = st.apply(&f.solvent);
                }
                (p_values[best_j], h)
            } else if w < 0.0 {
                let st = grid.weights(f64::NEG_INFINITY, (-w).ln());
                for (f, hf) in fields.iter().zip(h.iter_mut()) {
                    *hf = st.apply(&f.insolvent);
                }
                (0.0, h)
            } else {
                let st = grid.weights(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for (f, hf) in fields.iter().zip(h.iter_mut()) {
                    *hf = st.apply(&f.solvent);
                }
                (0.0, h)
            }
        })
        .collect();
    let mut p_table = Vec::with_capacity(n);
    let mut h_fields = vec![Vec::with_capacity(n); nf];
    for (p, h) in stage_one {
        p_table.push(p);
        for (hf, v) in h_fields.iter_mut().zip(h) {
            hf.push(v);
        }
    }

    // Stage two: best withdrawal for every pre-withdrawal wealth node.
    let stage_two: Vec<(f64, Vec<f64>)> = axis
        .nodes
        .par_iter()
        .map_init(Vec::new, |cands, &w| {
            withdrawal_candidates(sc, opts, w, i, cands);
            let mut best = f64::NEG_INFINITY;
            let mut best_q = cands[0];
            for &q in cands.iter() {
                let v = q + axis.interpolate(&h_fields[0], w - q);
                if v > best {
                    best = v;
                    best_q = q;
                }
            }
            let vals = h_fields
                .iter()
                .zip(adds_q)
                .map(|(hf, &add)| {
                    let v = axis.interpolate(hf, w - best_q);
                    if add {
                        best_q + v
                    } else {
                        v
                    }
                })
                .collect();
            (best_q, vals)
        })
        .collect();
    let mut q_table = Vec::with_capacity(n);
    let mut values = vec![Vec::with_capacity(n); nf];
    for (q, vals) in stage_two {
        q_table.push(q);
        for (vf, v) in values.iter_mut().zip(vals) {
            vf.push(v);
        }
    }
    Ok(RebalanceOutput {
        values,
        q: q_table,
        p: p_table,
    })
}

/// Rebalancing step for a single value field at `t_i^+`: returns the value
/// at `t_i^-` over the wealth axis and the maximizing controls.
pub fn rebalance_step(
    grid: &StateGrid,
    axis: &WealthAxis,
    v_plus: &ValueField,
    i: usize,
    scenario: &Scenario,
    options: &SolverOptions,
) -> Result<RebalanceOutput> {
    if !v_plus.is_finite() {
        return Err(Error::Argument("value field has non-finite entries".into()));
    }
    rebalance_fields(grid, axis, &[v_plus], &[true], i, scenario, options)
}

/// Backward induction for a fixed terminal condition.
pub fn solve_fixed(
    obj: &ObjectiveSpec,
    market: &MarketParams,
    scenario: &Scenario,
    green: Arc<GreensFunction>,
    w_prime: Option<f64>,
    options: &SolverOptions,
) -> Result<SolveResult> {
    DpSolver::with_green(*market, *scenario, green, *options)?.solve_fixed(obj, w_prime)
}

/// Expected withdrawals plus `kappa` times expected shortfall, with the
/// outer search over `W'`.
pub fn solve_ew_es(
    alpha: f64,
    kappa: f64,
    market: &MarketParams,
    scenario: &Scenario,
    green: Arc<GreensFunction>,
    options: &SolverOptions,
) -> Result<SolveResult> {
    DpSolver::with_green(*market, *scenario, green, *options)?.solve_ew_es(alpha, kappa)
}
