//! Bivariate double-exponential jump-diffusion market for a stock index and
//! a bond index.
//!
//! Each amount follows
//!
//! ```text
//! dX/X- = (mu - lambda * gamma) dt + sigma dZ + d( sum_{i <= pi_t} (xi_i - 1) )
//! ```
//!
//! where `log xi` has the asymmetric double-exponential density with
//! up-jump probability `u` and decay rates `eta1` (up) and `eta2` (down).
//! The two Brownian drivers are correlated with `rho_sb`; the jump processes
//! of the two assets are independent. While the bond amount is negative
//! (debt), its drift carries an extra borrowing spread `mu_c_b`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jump-diffusion parameters of a single asset. Rates are per year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KouJumpParams {
    /// Uncompensated drift.
    pub mu: f64,
    /// Diffusive volatility.
    pub sigma: f64,
    /// Jump intensity.
    pub lambda: f64,
    /// Probability that a jump is upward.
    pub u: f64,
    /// Decay rate of up-jumps in log space; must exceed one.
    pub eta1: f64,
    /// Decay rate of down-jumps in log space.
    pub eta2: f64,
}

impl KouJumpParams {
    pub fn validate(&self, label: &str) -> Result<()> {
        let finite = [self.mu, self.sigma, self.lambda, self.u, self.eta1, self.eta2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Argument(format!("{label}: parameters must be finite")));
        }
        if self.sigma < 0.0 {
            return Err(Error::Argument(format!("{label}: sigma must be >= 0")));
        }
        if self.lambda < 0.0 {
            return Err(Error::Argument(format!("{label}: lambda must be >= 0")));
        }
        if !(0.0..=1.0).contains(&self.u) {
            return Err(Error::Argument(format!("{label}: u must lie in [0, 1]")));
        }
        if self.eta1 <= 1.0 {
            return Err(Error::Domain(format!(
                "{label}: eta1 = {} must exceed 1 for a finite mean jump",
                self.eta1
            )));
        }
        if self.eta2 <= 0.0 {
            return Err(Error::Argument(format!("{label}: eta2 must be > 0")));
        }
        Ok(())
    }

    /// `E[y]` for the log jump size `y`.
    pub fn mean_log_jump(&self) -> f64 {
        self.u / self.eta1 - (1.0 - self.u) / self.eta2
    }

    /// `E[y^2]` for the log jump size `y`.
    pub fn second_moment_log_jump(&self) -> f64 {
        2.0 * self.u / (self.eta1 * self.eta1) + 2.0 * (1.0 - self.u) / (self.eta2 * self.eta2)
    }

    /// Drift of the log amount: `mu - lambda * gamma - sigma^2 / 2`.
    pub fn log_drift(&self) -> Result<f64> {
        Ok(self.mu - self.lambda * jump_compensator(self)? - 0.5 * self.sigma * self.sigma)
    }

    fn log_drift_unchecked(&self) -> f64 {
        self.mu - self.lambda * compensator_unchecked(self) - 0.5 * self.sigma * self.sigma
    }
}

/// `gamma = E[xi - 1]` for the double-exponential jump multiplier.
pub fn jump_compensator(p: &KouJumpParams) -> Result<f64> {
    if p.eta1 <= 1.0 {
        return Err(Error::Domain(format!(
            "eta1 = {} <= 1: the mean jump multiplier diverges",
            p.eta1
        )));
    }
    if p.eta2 <= 0.0 {
        return Err(Error::Domain(format!("eta2 = {} must be positive", p.eta2)));
    }
    Ok(compensator_unchecked(p))
}

fn compensator_unchecked(p: &KouJumpParams) -> f64 {
    p.u * p.eta1 / (p.eta1 - 1.0) + (1.0 - p.u) * p.eta2 / (p.eta2 + 1.0) - 1.0
}

/// Characteristic function `E[exp(i omega y)]` of the log jump size.
pub fn jump_log_char(p: &KouJumpParams, omega: f64) -> Complex64 {
    let up = Complex64::new(p.u * p.eta1, 0.0) / Complex64::new(p.eta1, -omega);
    let down = Complex64::new((1.0 - p.u) * p.eta2, 0.0) / Complex64::new(p.eta2, omega);
    up + down
}

/// Joint market parameters: stock, bond, diffusion correlation and the
/// borrowing spread paid on debt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlatMarket", into = "FlatMarket")]
pub struct MarketParams {
    pub stock: KouJumpParams,
    pub bond: KouJumpParams,
    pub rho_sb: f64,
    pub mu_c_b: f64,
}

impl MarketParams {
    /// Real CRSP value-weighted index and real 30-day T-bills, fit to
    /// 1926:1-2023:12, with a 3% borrowing spread.
    pub fn crsp_tbill() -> Self {
        MarketParams {
            stock: KouJumpParams {
                mu: 0.087323,
                sigma: 0.147716,
                lambda: 0.316326,
                u: 0.225806,
                eta1: 4.3591,
                eta2: 5.53370,
            },
            bond: KouJumpParams {
                mu: 0.0032,
                sigma: 0.0140,
                lambda: 0.3878,
                u: 0.3947,
                eta1: 61.5350,
                eta2: 53.4043,
            },
            rho_sb: 0.095933,
            mu_c_b: 0.03,
        }
    }

    /// A market with no randomness: both assets grow at their drift.
    pub fn deterministic(mu_s: f64, mu_b: f64, mu_c_b: f64) -> Self {
        let flat = |mu| KouJumpParams {
            mu,
            sigma: 0.0,
            lambda: 0.0,
            u: 0.5,
            eta1: 10.0,
            eta2: 10.0,
        };
        MarketParams {
            stock: flat(mu_s),
            bond: flat(mu_b),
            rho_sb: 0.0,
            mu_c_b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stock.validate("stock")?;
        self.bond.validate("bond")?;
        if !self.rho_sb.is_finite() || self.rho_sb.abs() > 1.0 {
            return Err(Error::Argument("rho_sb must lie in [-1, 1]".into()));
        }
        if !self.mu_c_b.is_finite() || self.mu_c_b < 0.0 {
            return Err(Error::Argument("mu_c_b must be >= 0".into()));
        }
        Ok(())
    }

    /// Log-amount drifts `(a_s, a_b)`, with the spread added to the bond
    /// drift when `insolvent` is set.
    pub fn log_drifts(&self, insolvent: bool) -> (f64, f64) {
        let spread = if insolvent { self.mu_c_b } else { 0.0 };
        (
            self.stock.log_drift_unchecked(),
            self.bond.log_drift_unchecked() + spread,
        )
    }

    /// Per-unit-time exponent `psi` with `E[exp(i w . X_dt)] = exp(dt * psi)`.
    pub fn char_exponent(&self, omega_s: f64, omega_b: f64, insolvent: bool) -> Complex64 {
        let (a_s, a_b) = self.log_drifts(insolvent);
        let (ss, sb) = (self.stock.sigma, self.bond.sigma);
        let diffusion = -0.5
            * (ss * ss * omega_s * omega_s
                + 2.0 * self.rho_sb * ss * sb * omega_s * omega_b
                + sb * sb * omega_b * omega_b);
        let mut psi = Complex64::new(diffusion, omega_s * a_s + omega_b * a_b);
        if self.stock.lambda > 0.0 {
            psi += self.stock.lambda * (jump_log_char(&self.stock, omega_s) - 1.0);
        }
        if self.bond.lambda > 0.0 {
            psi += self.bond.lambda * (jump_log_char(&self.bond, omega_b) - 1.0);
        }
        psi
    }

    /// Analytic mean of `(dlog S, dlog B)` over `dt`.
    pub fn increment_mean(&self, dt: f64, insolvent: bool) -> (f64, f64) {
        let (a_s, a_b) = self.log_drifts(insolvent);
        (
            dt * (a_s + self.stock.lambda * self.stock.mean_log_jump()),
            dt * (a_b + self.bond.lambda * self.bond.mean_log_jump()),
        )
    }

    /// Analytic variance of `(dlog S, dlog B)` over `dt`.
    pub fn increment_variance(&self, dt: f64) -> (f64, f64) {
        let var = |p: &KouJumpParams| dt * (p.sigma * p.sigma + p.lambda * p.second_moment_log_jump());
        (var(&self.stock), var(&self.bond))
    }
}

/// Joint characteristic function of `(dlog S, dlog B)` over `dt`.
pub fn joint_char(
    m: &MarketParams,
    omega_s: f64,
    omega_b: f64,
    dt: f64,
    insolvent: bool,
) -> Result<Complex64> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    Ok((dt * m.char_exponent(omega_s, omega_b, insolvent)).exp())
}

/// Change of the log stock and log bond amounts over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIncrement {
    pub ds: f64,
    pub db: f64,
}

/// Exact sampler for one-period log increments. Distributions are built
/// once so that repeated draws are cheap.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    dt: f64,
    sqrt_dt: f64,
    drift_solvent: (f64, f64),
    drift_insolvent: (f64, f64),
    sigma: (f64, f64),
    rho: f64,
    rho_c: f64,
    stock_jumps: Option<JumpSampler>,
    bond_jumps: Option<JumpSampler>,
}

#[derive(Debug, Clone)]
struct JumpSampler {
    count: Poisson<f64>,
    u: f64,
    up: Exp<f64>,
    down: Exp<f64>,
}

impl JumpSampler {
    fn new(p: &KouJumpParams, dt: f64) -> Result<Option<Self>> {
        if p.lambda == 0.0 {
            return Ok(None);
        }
        let bad = |e: &dyn std::fmt::Display| Error::Argument(format!("jump sampler: {e}"));
        Ok(Some(JumpSampler {
            count: Poisson::new(p.lambda * dt).map_err(|e| bad(&e))?,
            u: p.u,
            up: Exp::new(p.eta1).map_err(|e| bad(&e))?,
            down: Exp::new(p.eta2).map_err(|e| bad(&e))?,
        }))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = self.count.sample(rng) as u64;
        let mut total = 0.0;
        for _ in 0..n {
            if rng.random::<f64>() < self.u {
                total += self.up.sample(rng);
            } else {
                total -= self.down.sample(rng);
            }
        }
        total
    }
}

impl IncrementSampler {
    pub fn new(m: &MarketParams, dt: f64) -> Result<Self> {
        m.validate()?;
        if !(dt > 0.0) {
            return Err(Error::Argument(format!("dt must be positive, got {dt}")));
        }
        let (a_s, a_b) = m.log_drifts(false);
        let (_, a_b_insolvent) = m.log_drifts(true);
        Ok(IncrementSampler {
            dt,
            sqrt_dt: dt.sqrt(),
            drift_solvent: (a_s * dt, a_b * dt),
            drift_insolvent: (a_s * dt, a_b_insolvent * dt),
            sigma: (m.stock.sigma, m.bond.sigma),
            rho: m.rho_sb,
            rho_c: (1.0 - m.rho_sb * m.rho_sb).max(0.0).sqrt(),
            stock_jumps: JumpSampler::new(&m.stock, dt)?,
            bond_jumps: JumpSampler::new(&m.bond, dt)?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sample<R: Rng + ?Sized>(&self, insolvent: bool, rng: &mut R) -> LogIncrement {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let zb = self.rho * z1 + self.rho_c * z2;
        let (mut ds, mut db) = if insolvent {
            self.drift_insolvent
        } else {
            self.drift_solvent
        };
        ds += self.sigma.0 * self.sqrt_dt * z1;
        db += self.sigma.1 * self.sqrt_dt * zb;
        if let Some(j) = &self.stock_jumps {
            ds += j.sample(rng);
        }
        if let Some(j) = &self.bond_jumps {
            db += j.sample(rng);
        }
        LogIncrement { ds, db }
    }

    /// Diffusive and jump parts of the increment, returned separately.
    /// Used to check the independence of the two jump processes.
    pub fn sample_parts<R: Rng + ?Sized>(
        &self,
        insolvent: bool,
        rng: &mut R,
    ) -> (LogIncrement, LogIncrement) {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let zb = self.rho * z1 + self.rho_c * z2;
        let (ds0, db0) = if insolvent {
            self.drift_insolvent
        } else {
            self.drift_solvent
        };
        let diffusion = LogIncrement {
            ds: ds0 + self.sigma.0 * self.sqrt_dt * z1,
            db: db0 + self.sigma.1 * self.sqrt_dt * zb,
        };
        let jumps = LogIncrement {
            ds: self.stock_jumps.as_ref().map_or(0.0, |j| j.sample(rng)),
            db: self.bond_jumps.as_ref().map_or(0.0, |j| j.sample(rng)),
        };
        (diffusion, jumps)
    }
}

/// Draw one increment. Builds a fresh sampler; prefer [`IncrementSampler`]
/// inside loops.
pub fn sample_increment<R: Rng + ?Sized>(
    m: &MarketParams,
    dt: f64,
    insolvent: bool,
    rng: &mut R,
) -> Result<LogIncrement> {
    Ok(IncrementSampler::new(m, dt)?.sample(insolvent, rng))
}

/// Flat key layout used in configuration files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatMarket {
    mu_s: f64,
    sigma_s: f64,
    lambda_s: f64,
    u_s: f64,
    eta1_s: f64,
    eta2_s: f64,
    mu_b: f64,
    sigma_b: f64,
    lambda_b: f64,
    u_b: f64,
    eta1_b: f64,
    eta2_b: f64,
    rho_sb: f64,
    mu_c_b: f64,
}

impl TryFrom<FlatMarket> for MarketParams {
    type Error = Error;

    fn try_from(f: FlatMarket) -> Result<Self> {
        let m = MarketParams {
            stock: KouJumpParams {
                mu: f.mu_s,
                sigma: f.sigma_s,
                lambda: f.lambda_s,
                u: f.u_s,
                eta1: f.eta1_s,
                eta2: f.eta2_s,
            },
            bond: KouJumpParams {
                mu: f.mu_b,
                sigma: f.sigma_b,
                lambda: f.lambda_b,
                u: f.u_b,
                eta1: f.eta1_b,
                eta2: f.eta2_b,
            },
            rho_sb: f.rho_sb,
            mu_c_b: f.mu_c_b,
        };
        m.validate()?;
        Ok(m)
    }
}

impl From<MarketParams> for FlatMarket {
    fn from(m: MarketParams) -> Self {
        FlatMarket {
            mu_s: m.stock.mu,
            sigma_s: m.stock.sigma,
            lambda_s: m.stock.lambda,
            u_s: m.stock.u,
            eta1_s: m.stock.eta1,
            eta2_s: m.stock.eta2,
            mu_b: m.bond.mu,
            sigma_b: m.bond.sigma,
            lambda_b: m.bond.lambda,
            u_b: m.bond.u,
            eta1_b: m.bond.eta1,
            eta2_b: m.bond.eta2,
            rho_sb: m.rho_sb,
            mu_c_b: m.mu_c_b,
        }
    }
}
