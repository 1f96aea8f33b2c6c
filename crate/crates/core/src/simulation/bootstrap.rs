use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::paths::{path_rng, run_paths, StatsSpec};
use super::series::ReturnSeries;
use super::stats::SummaryStats;
use crate::control::ControlField;
use crate::error::{Error, Result};

const BOND_STREAM_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stationary block bootstrap settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSpec {
    /// Mean block length in months. Block lengths are geometric with this
    /// mean; `inf` draws each path as one contiguous window.
    pub expected_blocksize: f64,
    /// Draw stock and bond returns at the same indices.
    #[serde(default = "yes")]
    pub paired: bool,
    /// Wrap blocks around the end of the series.
    #[serde(default = "yes")]
    pub circular: bool,
    pub n_paths: usize,
    pub seed: u64,
}

fn yes() -> bool {
    true
}

impl BootstrapSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.expected_blocksize >= 1.0) {
            return Err(Error::Argument(format!(
                "expected blocksize must be at least one month, got {}",
                self.expected_blocksize
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Argument("n_paths must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws `(start, length)` blocks: uniform start, geometric length.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    n: usize,
    length: Option<Geometric>,
}

impl BlockSampler {
    pub fn new(series_len: usize, expected_blocksize: f64) -> Result<Self> {
        if series_len == 0 {
            return Err(Error::Argument("cannot resample an empty series".into()));
        }
        if !(expected_blocksize >= 1.0) {
            return Err(Error::Argument("expected blocksize must be >= 1".into()));
        }
        let length = if expected_blocksize.is_finite() {
            Some(
                Geometric::new(1.0 / expected_blocksize)
                    .map_err(|e| Error::Argument(format!("block length: {e}")))?,
            )
        } else {
            None
        };
        Ok(BlockSampler {
            n: series_len,
            length,
        })
    }

    /// Next block. Infinite blocks report `usize::MAX` as their length.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let start = rng.random_range(0..self.n);
        let len = match &self.length {
            Some(g) => 1 + g.sample(rng) as usize,
            None => usize::MAX,
        };
        (start, len)
    }
}

fn indices(
    sampler: &BlockSampler,
    spec: &BootstrapSpec,
    n: usize,
    need: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(need);
    if !spec.expected_blocksize.is_finite() && !spec.circular {
        let start = rng.random_range(0..=n - need);
        out.extend(start..start + need);
        return out;
    }
    while out.len() < need {
        let (start, len) = sampler.sample(rng);
        for j in 0..len {
            if out.len() == need {
                break;
            }
            let idx = start + j;
            if spec.circular {
                out.push(idx % n);
            } else if idx < n {
                out.push(idx);
            } else {
                break;
            }
        }
    }
    out
}

/// Resampled monthly return paths; path `k` is a pure function of the seed
/// and `k`.
#[derive(Debug, Clone)]
pub struct BootstrapPaths<'a> {
    series: &'a ReturnSeries,
    spec: BootstrapSpec,
    sampler: BlockSampler,
    months: usize,
}

impl<'a> BootstrapPaths<'a> {
    pub fn months(&self) -> usize {
        self.months
    }

    pub fn n_paths(&self) -> usize {
        self.spec.n_paths
    }

    /// Monthly `(stock, bond)` returns of path `k`.
    pub fn path(&self, k: u64) -> Vec<(f64, f64)> {
        let n = self.series.len();
        let mut rng = path_rng(self.spec.seed, k);
        let stock_idx = indices(&self.sampler, &self.spec, n, self.months, &mut rng);
        let bond_idx = if self.spec.paired {
            stock_idx.clone()
        } else {
            let mut rng = path_rng(self.spec.seed ^ BOND_STREAM_SALT, k);
            indices(&self.sampler, &self.spec, n, self.months, &mut rng)
        };
        stock_idx
            .iter()
            .zip(&bond_idx)
            .map(|(&i, &j)| (self.series.stock[i], self.series.bond[j]))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<(f64, f64)>> + '_ {
        (0..self.spec.n_paths as u64).map(|k| self.path(k))
    }
}

/// Stationary block bootstrap of `series` into paths of `horizon` years.
pub fn bootstrap_paths<'a>(
    series: &'a ReturnSeries,
    spec: &BootstrapSpec,
    horizon: f64,
) -> Result<BootstrapPaths<'a>> {
    spec.validate()?;
    if series.is_empty() {
        return Err(Error::Argument("cannot resample an empty series".into()));
    }
    let months = (horizon * 12.0).round() as usize;
    if months == 0 || ((horizon * 12.0) - months as f64).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "horizon {horizon} years is not a whole number of months"
        )));
    }
    if !spec.expected_blocksize.is_finite() && !spec.circular && series.len() < months {
        return Err(Error::Argument(format!(
            "series has {} months, a single window needs {months}",
            series.len()
        )));
    }
    Ok(BootstrapPaths {
        series,
        spec: *spec,
        sampler: BlockSampler::new(series.len(), spec.expected_blocksize)?,
        months,
    })
}

/// Apply stored controls along bootstrap-resampled paths. Within each
/// rebalancing interval the monthly returns are compounded; debt grows at
/// the resampled bond return plus the borrowing spread `mu_c_b`.
pub fn simulate_bootstrap(
    controls: &ControlField,
    series: &ReturnSeries,
    spec: &BootstrapSpec,
    mu_c_b: f64,
    stats: &StatsSpec,
) -> Result<SummaryStats> {
    let sc = controls.scenario;
    sc.validate()?;
    let per_period = (sc.dt() * 12.0).round() as usize;
    if per_period == 0 || (sc.dt() * 12.0 - per_period as f64).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "rebalancing interval {} years is not a whole number of months",
            sc.dt()
        )));
    }
    let paths = bootstrap_paths(series, spec, sc.horizon)?;
    let spread = (mu_c_b * sc.dt()).exp();
    run_paths(controls, spec.n_paths, stats, |k| {
        let months = paths.path(k);
        move |i, insolvent| {
            let mut gs = 1.0;
            let mut gb = 1.0;
            for &(rs, rb) in &months[i * per_period..(i + 1) * per_period] {
                gs *= 1.0 + rs;
                gb *= 1.0 + rb;
            }
            if insolvent {
                gb *= spread;
            }
            (gs, gb)
        }
    })
}
