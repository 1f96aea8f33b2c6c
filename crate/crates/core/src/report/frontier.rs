use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::control::{DpSolver, ObjectiveSpec, RiskKind, SolveResult};
use crate::error::{Error, Result};
use crate::simulation::{simulate_synthetic, StatsSpec, SummaryStats};

pub const FRONTIER_HEADER: &str = "kappa,kind,status,dp_value,dp_ew_per_period,dp_risk,\
ew_total,ew_per_period,native_risk,ls,ps,es,var,w_star,error";

/// One point of an efficient frontier: the DP solve at `kappa` and Monte
/// Carlo statistics of its controls in every risk measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub kappa: f64,
    pub kind: RiskKind,
    pub dp_value: f64,
    pub dp_ew_per_period: f64,
    pub dp_risk: f64,
    pub ew_total: f64,
    pub ew_per_period: f64,
    /// The statistic the objective penalizes: LS, PS or ES.
    pub native_risk: f64,
    pub ls: f64,
    pub ps: f64,
    pub es: f64,
    pub var: f64,
    pub w_star: Option<f64>,
}

impl FrontierPoint {
    pub fn from_parts(r: &SolveResult, s: &SummaryStats) -> Result<Self> {
        let kind = r.objective.kind;
        let native_risk = match kind {
            RiskKind::LS => s.ls,
            RiskKind::PS => s.ps,
            RiskKind::ES => s.es,
        };
        let pt = FrontierPoint {
            kappa: r.objective.kappa,
            kind,
            dp_value: r.value,
            dp_ew_per_period: r.ew_per_period(),
            dp_risk: r.risk_component,
            ew_total: s.ew_total,
            ew_per_period: s.ew_per_period,
            native_risk,
            ls: s.ls,
            ps: s.ps,
            es: s.es,
            var: s.var,
            w_star: r.w_star,
        };
        let sc = &r.controls.scenario;
        let bound = sc.rebalances as f64 * sc.q_max * (1.0 + 1e-12);
        let finite = [pt.dp_value, pt.ew_total, pt.native_risk, pt.ls, pt.ps, pt.es, pt.var]
            .iter()
            .all(|v| v.is_finite());
        if !finite || pt.ew_total > bound {
            return Err(Error::Resolution(format!(
                "frontier point at kappa {} is not finite or exceeds M q_max",
                pt.kappa
            )));
        }
        Ok(pt)
    }

    /// `true` if this point is at least as good in EW and in its native
    /// risk and strictly better in one, allowing `tol` slack. Larger is
    /// better for LS and ES, smaller for PS.
    pub fn dominates(&self, other: &FrontierPoint, tol: f64) -> bool {
        let better_risk = |a: f64, b: f64| match self.kind {
            RiskKind::PS => b - a,
            _ => a - b,
        };
        let dew = self.ew_per_period - other.ew_per_period;
        let drisk = better_risk(self.native_risk, other.native_risk);
        dew >= -tol && drisk >= -tol && (dew > tol || drisk > tol)
    }
}

/// Monte Carlo settings used to evaluate each frontier point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub n_paths: usize,
    pub seed: u64,
    pub stats: StatsSpec,
}

/// Sweep outcome at one weight; failures keep their message.
#[derive(Debug, Clone)]
pub struct FrontierOutcome {
    pub kappa: f64,
    pub kind: RiskKind,
    pub point: std::result::Result<FrontierPoint, String>,
    pub solve: Option<SolveResult>,
}

/// Solve and simulate at every `kappa`, sorted ascending; `on_point` sees
/// each outcome as soon as it is ready. A failing point
/// is recorded and the sweep continues.
pub fn sweep(
    solver: &DpSolver,
    template: &ObjectiveSpec,
    kappas: &[f64],
    mc: &Evaluation,
    mut on_point: impl FnMut(&FrontierOutcome),
) -> Result<Vec<FrontierOutcome>> {
    if kappas.is_empty() {
        return Err(Error::Argument("frontier needs at least one kappa".into()));
    }
    let mut ks = kappas.to_vec();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    let mut out = Vec::with_capacity(ks.len());
    for kappa in ks {
        let obj = ObjectiveSpec { kappa, ..*template };
        let run = || -> Result<(SolveResult, FrontierPoint)> {
            let r = solver.solve(&obj)?;
            let st = StatsSpec {
                target: obj.target,
                ..mc.stats
            };
            let s = simulate_synthetic(&r.controls, &solver.market, mc.n_paths, mc.seed, &st)?;
            let pt = FrontierPoint::from_parts(&r, &s)?;
            Ok((r, pt))
        };
        let outcome = match run() {
            Ok((r, pt)) => FrontierOutcome {
                kappa,
                kind: obj.kind,
                point: Ok(pt),
                solve: Some(r),
            },
            Err(e) => FrontierOutcome {
                kappa,
                kind: obj.kind,
                point: Err(e.to_string()),
                solve: None,
            },
        };
        on_point(&outcome);
        out.push(outcome);
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn frontier_csv(rows: &[FrontierOutcome]) -> String {
    let mut out = format!("{FRONTIER_HEADER}\n");
    for r in rows {
        let kind = format!("{:?}", r.kind);
        match &r.point {
            Ok(p) => {
                let _ = writeln!(
                    out,
                    "{},{kind},ok,{},{},{},{},{},{},{},{},{},{},{},",
                    p.kappa,
                    p.dp_value,
                    p.dp_ew_per_period,
                    p.dp_risk,
                    p.ew_total,
                    p.ew_per_period,
                    p.native_risk,
                    p.ls,
                    p.ps,
                    p.es,
                    p.var,
                    opt(p.w_star)
                );
            }
            Err(msg) => {
                let msg = msg.replace(['"', '\n'], " ");
                let _ = writeln!(out, "{},{kind},failed,,,,,,,,,,,,\"{msg}\"", r.kappa);
            }
        }
    }
    out
}

/// Pairs `(i, j)` where point `i` dominates point `j` by more than `tol`.
pub fn pareto_violations(points: &[FrontierPoint], tol: f64) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate() {
            if i != j && a.dominates(b, tol) {
                v.push((i, j));
            }
        }
    }
    v
}
