//! Log-uniform computational lattices over stock and bond amounts.
//!
//! Solvent states live on a lattice over `(log s, log b)`. Insolvent states
//! (negative bond amount, i.e. debt) live on a reflected lattice over
//! `(log s, log b')` with `b' = -b`. Trading has ceased in those states so
//! the stock amount is zero there; the reflected lattice keeps the same
//! shape as the solvent one so both branches can share a layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::MarketParams;

/// Localization bounds and node counts. Nodes are equally spaced in log
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_s: usize,
    pub n_b: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub b_min: f64,
    pub b_max: f64,
}

impl GridSpec {
    /// Bounds `w0 * exp(+-K)` on both axes, where `K = |mu| T + 8 sigma sqrt(T)`
    /// maximized over the two assets.
    pub fn with_default_bounds(
        n_s: usize,
        n_b: usize,
        market: &MarketParams,
        horizon: f64,
        w0: f64,
    ) -> Result<Self> {
        if !(horizon > 0.0) || !(w0 > 0.0) {
            return Err(Error::Argument(
                "horizon and initial wealth must be positive".into(),
            ));
        }
        let reach = |mu: f64, sigma: f64| mu.abs() * horizon + 8.0 * sigma * horizon.sqrt();
        let k = reach(market.stock.mu, market.stock.sigma)
            .max(reach(market.bond.mu, market.bond.sigma));
        let lo = w0 * (-k).exp();
        let hi = w0 * k.exp();
        let spec = GridSpec {
            n_s,
            n_b,
            s_min: lo,
            s_max: hi,
            b_min: lo,
            b_max: hi,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_s", self.n_s), ("n_b", self.n_b)] {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::Argument(format!(
                    "{name} = {n} must be a power of two and at least 2"
                )));
            }
        }
        let ordered = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi;
        if !ordered(self.s_min, self.s_max) {
            return Err(Error::Argument(format!(
                "need 0 < s_min < s_max, got [{}, {}]",
                self.s_min, self.s_max
            )));
        }
        if !ordered(self.b_min, self.b_max) {
            return Err(Error::Argument(format!(
                "need 0 < b_min < b_max, got [{}, {}]",
                self.b_min, self.b_max
            )));
        }
        Ok(())
    }

    pub fn d_log_s(&self) -> f64 {
        (self.s_max.ln() - self.s_min.ln()) / (self.n_s - 1) as f64
    }

    pub fn d_log_b(&self) -> f64 {
        (self.b_max.ln() - self.b_min.ln()) / (self.n_b - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Solvent,
    Insolvent,
}

/// A lattice node. `i_b` indexes `log b` on the solvent branch and
/// `log b'` on the reflected branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub branch: Branch,
    pub i_s: usize,
    pub i_b: usize,
}

/// One uniform axis in log coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LogAxis {
    pub log_min: f64,
    pub step: f64,
    pub log_nodes: Vec<f64>,
    pub nodes: Vec<f64>,
}

impl LogAxis {
    fn new(min: f64, max: f64, n: usize) -> Self {
        let log_min = min.ln();
        let log_max = max.ln();
        let step = (log_max - log_min) / (n - 1) as f64;
        let log_nodes: Vec<f64> = (0..n)
            .map(|j| {
                if j == n - 1 {
                    log_max
                } else {
                    log_min + j as f64 * step
                }
            })
            .collect();
        let nodes = log_nodes.iter().map(|x| x.exp()).collect();
        LogAxis {
            log_min,
            step,
            log_nodes,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.log_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_nodes.is_empty()
    }

    /// Cell index and fractional offset for a log coordinate, clamped to the
    /// axis so that values beyond the ends extrapolate as constants.
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.log_nodes.len();
        let t = (x - self.log_min) / self.step;
        if !(t > 0.0) {
            return (0, 0.0);
        }
        if t >= (n - 1) as f64 {
            return (n - 2, 1.0);
        }
        let i = t as usize;
        (i, t - i as f64)
    }
}

/// Solvent and reflected lattices built from a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    pub spec: GridSpec,
    pub s_axis: LogAxis,
    pub b_axis: LogAxis,
}

pub fn build_grid(spec: GridSpec) -> Result<StateGrid> {
    spec.validate()?;
    Ok(StateGrid {
        spec,
        s_axis: LogAxis::new(spec.s_min, spec.s_max, spec.n_s),
        b_axis: LogAxis::new(spec.b_min, spec.b_max, spec.n_b),
    })
}

impl StateGrid {
    pub fn n_s(&self) -> usize {
        self.spec.n_s
    }

    pub fn n_b(&self) -> usize {
        self.spec.n_b
    }

    /// Nodes per branch.
    pub fn len(&self) -> usize {
        self.spec.n_s * self.spec.n_b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of `(i_s, i_b)` within one branch; `log b` is the fast axis.
    #[inline]
    pub fn index(&self, i_s: usize, i_b: usize) -> usize {
        i_s * self.spec.n_b + i_b
    }

    /// `(s, b, w)` at a node. On the reflected branch the stock amount is
    /// zero and `b = -b'`.
    pub fn wealth_of(&self, node: Node) -> (f64, f64, f64) {
        match node.branch {
            Branch::Solvent => {
                let s = self.s_axis.nodes[node.i_s];
                let b = self.b_axis.nodes[node.i_b];
                (s, b, s + b)
            }
            Branch::Insolvent => {
                let b = -self.b_axis.nodes[node.i_b];
                (0.0, b, b)
            }
        }
    }

    pub fn new_field(&self, time_label: f64) -> ValueField {
        ValueField {
            solvent: vec![0.0; self.len()],
            insolvent: vec![0.0; self.len()],
            time_label,
        }
    }

    /// Field holding `f(s, b)` at every node of both branches, with the
    /// node coordinates given by [`StateGrid::wealth_of`].
    pub fn field_from_fn(&self, time_label: f64, mut f: impl FnMut(f64, f64) -> f64) -> ValueField {
        let mut field = self.new_field(time_label);
        for i_s in 0..self.n_s() {
            for i_b in 0..self.n_b() {
                let k = self.index(i_s, i_b);
                let (s, b, _) = self.wealth_of(Node {
                    branch: Branch::Solvent,
                    i_s,
                    i_b,
                });
                field.solvent[k] = f(s, b);
                let (s, b, _) = self.wealth_of(Node {
                    branch: Branch::Insolvent,
                    i_s,
                    i_b,
                });
                field.insolvent[k] = f(s, b);
            }
        }
        field
    }

    /// Bilinear interpolation in `(log s, log |b|)` with constant
    /// extrapolation. `b > 0` reads the solvent lattice, `b < 0` the
    /// reflected one, and `b = 0` reads the solvent lattice at `b_min`.
    pub fn interpolate(&self, field: &ValueField, s: f64, b: f64) -> Result<f64> {
        if s.is_nan() || b.is_nan() {
            return Err(Error::Argument("interpolation at NaN coordinates".into()));
        }
        if field.solvent.len() != self.len() || field.insolvent.len() != self.len() {
            return Err(Error::Argument("field shape does not match grid".into()));
        }
        Ok(self.interpolate_unchecked(field, s, b))
    }

    #[inline]
    pub fn interpolate_unchecked(&self, field: &ValueField, s: f64, b: f64) -> f64 {
        let (values, mag) = if b < 0.0 {
            (&field.insolvent, -b)
        } else {
            (&field.solvent, b)
        };
        let ls = if s > 0.0 { s.ln() } else { f64::NEG_INFINITY };
        let lb = if mag > 0.0 { mag.ln() } else { f64::NEG_INFINITY };
        let w = self.weights(ls, lb);
        w.apply(values)
    }

    /// Interpolation stencil at log coordinates `(ls, lb)`.
    #[inline]
    pub fn weights(&self, ls: f64, lb: f64) -> Stencil {
        let (i, fs) = self.s_axis.locate(ls);
        let (j, fb) = self.b_axis.locate(lb);
        Stencil {
            base: self.index(i, j),
            stride: self.spec.n_b,
            fs,
            fb,
        }
    }
}

/// Four-point bilinear stencil on one branch.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub base: usize,
    pub stride: usize,
    pub fs: f64,
    pub fb: f64,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let k = self.base;
        let lo = values[k] + self.fb * (values[k + 1] - values[k]);
        let k2 = k + self.stride;
        let hi = values[k2] + self.fb * (values[k2 + 1] - values[k2]);
        lo + self.fs * (hi - lo)
    }
}

/// Values over both branches of a [`StateGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    pub solvent: Vec<f64>,
    pub insolvent: Vec<f64>,
    pub time_label: f64,
}

impl ValueField {
    pub fn is_finite(&self) -> bool {
        self.solvent.iter().chain(&self.insolvent).all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &ValueField) -> bool {
        self.solvent.len() == other.solvent.len() && self.insolvent.len() == other.insolvent.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> StateGrid {
        build_grid(GridSpec {
            n_s: 16,
            n_b: 8,
            s_min: 0.5,
            s_max: 2000.0,
            b_min: 0.25,
            b_max: 4000.0,
        })
        .unwrap()
    }

    #[test]
    fn two_point_axis() {
        let g = build_grid(GridSpec {
            n_s: 2,
            n_b: 2,
            s_min: 1.0,
            s_max: std::f64::consts::E,
            b_min: 1.0,
            b_max: 2.0,
        })
        .unwrap();
        assert_eq!(g.s_axis.log_nodes, vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = small().spec;
        spec.n_s = 12;
        assert!(build_grid(spec).is_err());
        let mut spec = small().spec;
        spec.s_min = 3000.0;
        assert!(build_grid(spec).is_err());
        let mut spec = small().spec;
        spec.b_min = 0.0;
        assert!(build_grid(spec).is_err());
    }

    #[test]
    fn log_spacing_is_uniform() {
        let g = small();
        let d = g.spec.d_log_s();
        for w in g.s_axis.log_nodes.windows(2) {
            assert!((w[1] - w[0] - d).abs() < 1e-13);
        }
    }

    #[test]
    fn default_bounds_cover_both_assets() {
        let m = MarketParams::crsp_tbill();
        let spec = GridSpec::with_default_bounds(512, 512, &m, 30.0, 1000.0).unwrap();
        let k = 0.087323 * 30.0 + 8.0 * 0.147716 * 30f64.sqrt();
        assert!((spec.s_max / 1000.0 - k.exp()).abs() < 1e-9 * k.exp());
        assert_eq!(spec.s_min, spec.b_min);
        assert_eq!(spec.s_max, spec.b_max);
    }

    #[test]
    fn wealth_of_branches() {
        let g = small();
        let (s, b, w) = g.wealth_of(Node {
            branch: Branch::Solvent,
            i_s: 3,
            i_b: 5,
        });
        assert_eq!(w, s + b);
        let (s, b, w) = g.wealth_of(Node {
            branch: Branch::Insolvent,
            i_s: 3,
            i_b: 5,
        });
        assert_eq!(s, 0.0);
        assert!(b < 0.0);
        assert_eq!(w, b);
        let mut prev = f64::NEG_INFINITY;
        for i_b in 0..g.n_b() {
            let (_, _, w) = g.wealth_of(Node {
                branch: Branch::Solvent,
                i_s: 2,
                i_b,
            });
            assert!(w > prev);
            prev = w;
        }
    }

    #[test]
    fn interpolation_exact_at_nodes_and_on_bilinear_fields() {
        let g = small();
        let f = |s: f64, b: f64| 2.0 * s.max(1e-300).ln() + 3.0 * b.abs().ln();
        let field = g.field_from_fn(0.0, f);
        for i_s in 0..g.n_s() {
            for i_b in 0..g.n_b() {
                let s = g.s_axis.nodes[i_s];
                let b = g.b_axis.nodes[i_b];
                let k = g.index(i_s, i_b);
                assert_eq!(g.interpolate(&field, s, b).unwrap(), field.solvent[k]);
            }
        }
        let ls = 0.5 * (g.s_axis.log_nodes[4] + g.s_axis.log_nodes[5]);
        let lb = 0.5 * (g.b_axis.log_nodes[2] + g.b_axis.log_nodes[3]);
        let got = g.interpolate(&field, ls.exp(), lb.exp()).unwrap();
        assert!((got - (2.0 * ls + 3.0 * lb)).abs() < 1e-10);
    }

    #[test]
    fn constant_extrapolation_and_branch_selection() {
        let g = small();
        let field = g.field_from_fn(0.0, |s, b| s + b);
        let edge = g.interpolate(&field, g.spec.s_max, 10.0).unwrap();
        let beyond = g.interpolate(&field, 10.0 * g.spec.s_max, 10.0).unwrap();
        assert_eq!(edge, beyond);
        let debt = g.interpolate(&field, 0.0, -g.b_axis.nodes[3]).unwrap();
        assert_eq!(debt, -g.b_axis.nodes[3]);
        let zero = g.interpolate(&field, 0.0, 0.0).unwrap();
        assert_eq!(zero, field.solvent[g.index(0, 0)]);
        assert!(g.interpolate(&field, f64::NAN, 1.0).is_err());
    }
}
