use crate::error::{Error, Result};

/// Total-wealth axis used for the withdrawal and allocation tables.
///
/// Uniform with step `h` over a central band, geometric beyond it. With `h`
/// equal to the withdrawal step and the band anchored at zero, subtracting
/// any candidate withdrawal from a band node lands on another node.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthAxis {
    pub nodes: Vec<f64>,
    h: f64,
    band_lo: f64,
    band_start: usize,
    band_len: usize,
}

const MAX_BAND_NODES: usize = 400_000;

impl WealthAxis {
    /// Uniform band `[lo, hi]` (rounded outwards to multiples of `h`),
    /// extended geometrically with ratio `ratio` down to `-reach_low` and up
    /// to `reach_high`.
    pub fn new(h: f64, lo: f64, hi: f64, reach_low: f64, reach_high: f64, ratio: f64) -> Result<Self> {
        if !(h > 0.0) || !(lo < 0.0) || !(hi > 0.0) || !(ratio > 1.0) {
            return Err(Error::Argument(
                "wealth axis needs h > 0, lo < 0 < hi and ratio > 1".into(),
            ));
        }
        let mut h = h;
        let span = hi - lo;
        if span / h > MAX_BAND_NODES as f64 {
            h *= (span / h / MAX_BAND_NODES as f64).ceil();
        }
        let k_lo = (lo / h).floor() as i64;
        let k_hi = (hi / h).ceil() as i64;
        let band_lo = k_lo as f64 * h;
        let band_hi = k_hi as f64 * h;

        let mut below = Vec::new();
        let mut x = band_lo;
        while x > -reach_low {
            x *= ratio;
            below.push(x);
        }
        below.reverse();
        let band_start = below.len();
        let mut nodes = below;
        for k in k_lo..=k_hi {
            nodes.push(k as f64 * h);
        }
        let band_len = nodes.len() - band_start;
        let mut x = band_hi;
        while x < reach_high {
            x *= ratio;
            nodes.push(x);
        }
        Ok(WealthAxis {
            nodes,
            h,
            band_lo,
            band_start,
            band_len,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Index of the node equal to `w`, if any.
    pub fn node_index(&self, w: f64) -> Option<usize> {
        let (k, t) = self.locate(w);
        if t == 0.0 && self.nodes[k] == w {
            Some(k)
        } else if t == 1.0 && self.nodes[k + 1] == w {
            Some(k + 1)
        } else {
            None
        }
    }

    /// Cell and fractional offset, clamped to the axis ends.
    #[inline]
    pub fn locate(&self, w: f64) -> (usize, f64) {
        let n = self.nodes.len();
        if !(w > self.nodes[0]) {
            return (0, 0.0);
        }
        if w >= self.nodes[n - 1] {
            return (n - 2, 1.0);
        }
        let band_hi = self.nodes[self.band_start + self.band_len - 1];
        if w >= self.band_lo && w < band_hi {
            let t = (w - self.band_lo) / self.h;
            let mut j = t.floor() as usize;
            let mut frac = t - j as f64;
            if j >= self.band_len - 1 {
                j = self.band_len - 2;
                frac = 1.0;
            }
            let rounded = frac.round();
            if (frac - rounded).abs() < 1e-9 {
                if rounded == 1.0 && j + 1 < self.band_len - 1 {
                    return (self.band_start + j + 1, 0.0);
                }
                frac = rounded;
            }
            return (self.band_start + j, frac);
        }
        let k = self.nodes.partition_point(|&x| x <= w) - 1;
        (k, (w - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k]))
    }

    /// Linear interpolation of nodal `values` with constant extrapolation.
    #[inline]
    pub fn interpolate(&self, values: &[f64], w: f64) -> f64 {
        let (k, t) = self.locate(w);
        if t == 0.0 {
            values[k]
        } else if t == 1.0 {
            values[k + 1]
        } else {
            values[k] + t * (values[k + 1] - values[k])
        }
    }
}
