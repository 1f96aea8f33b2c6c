use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::{ObjectiveSpec, Scenario, SolverOptions};
use crate::error::{Error, Result};
use crate::lattice::GridSpec;
use crate::market::MarketParams;
use crate::simulation::{BootstrapSpec, StatsSpec};

/// Lattice resolution, with optional explicit localization bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_s: usize,
    pub n_b: usize,
    #[serde(default)]
    pub s_min: Option<f64>,
    #[serde(default)]
    pub s_max: Option<f64>,
    #[serde(default)]
    pub b_min: Option<f64>,
    #[serde(default)]
    pub b_max: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_s: 512,
            n_b: 512,
            s_min: None,
            s_max: None,
            b_min: None,
            b_max: None,
        }
    }
}

impl GridConfig {
    pub fn resolve(&self, market: &MarketParams, scenario: &Scenario) -> Result<GridSpec> {
        let mut spec =
            GridSpec::with_default_bounds(self.n_s, self.n_b, market, scenario.horizon, scenario.w0)?;
        if let Some(v) = self.s_min {
            spec.s_min = v;
        }
        if let Some(v) = self.s_max {
            spec.s_max = v;
        }
        if let Some(v) = self.b_min {
            spec.b_min = v;
        }
        if let Some(v) = self.b_max {
            spec.b_max = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Synthetic Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Tail level for reported ES and VaR.
    pub alpha: f64,
    /// Paths kept for percentile fans.
    pub fan_paths: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            n_paths: 100_000,
            seed: 1,
            alpha: 0.05,
            fan_paths: 50_000,
        }
    }
}

/// Block bootstrap settings. Exactly one of `returns` and `model_months`
/// selects the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Monthly returns CSV; relative paths resolve against the config file.
    #[serde(default)]
    pub returns: Option<PathBuf>,
    /// Generate this many months from the configured market instead.
    #[serde(default)]
    pub model_months: Option<usize>,
    #[serde(default)]
    pub model_seed: u64,
    /// Expected block length in years.
    pub blocksize_years: f64,
    #[serde(default = "yes")]
    pub paired: bool,
    #[serde(default = "yes")]
    pub circular: bool,
    pub n_paths: usize,
    #[serde(default = "one")]
    pub seed: u64,
}

fn yes() -> bool {
    true
}

fn one() -> u64 {
    1
}

impl BootstrapConfig {
    pub fn spec(&self) -> BootstrapSpec {
        BootstrapSpec {
            expected_blocksize: self.blocksize_years * 12.0,
            paired: self.paired,
            circular: self.circular,
            n_paths: self.n_paths,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.returns, self.model_months) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "bootstrap: set either `returns` or `model_months`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "bootstrap: one of `returns` or `model_months` is required".into(),
                ))
            }
            (None, Some(0)) => {
                return Err(Error::Config("bootstrap.model_months must be positive".into()))
            }
            _ => {}
        }
        self.spec()
            .validate()
            .map_err(|e| Error::Config(format!("bootstrap: {e}")))
    }
}

/// A complete run description, read from TOML.
///
/// ```toml
/// output_dir = "out"
/// kappas = [1.0, 10.0, 30.0]
///
/// [market]
/// mu_s = 0.087323
/// # ... all Kou parameters for both assets, rho_sb, mu_c_b
///
/// [scenario]
/// T = 30.0
/// M = 30
/// W0 = 1000.0
/// q_min = 30.0
/// q_max = 60.0
/// epsilon = -1e-4
///
/// [grid]
/// n_s = 512
/// n_b = 512
///
/// [objective]
/// kind = "LS"
/// W = 0.0
/// kappa = 30.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "MarketParams::crsp_tbill")]
    pub market: MarketParams,
    #[serde(default = "Scenario::base_case")]
    pub scenario: Scenario,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub objective: Option<ObjectiveSpec>,
    /// Scalarization weights for frontier sweeps.
    #[serde(default)]
    pub kappas: Vec<f64>,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub bootstrap: Option<BootstrapConfig>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Directory the config was read from; not part of the file.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            market: MarketParams::crsp_tbill(),
            scenario: Scenario::base_case(),
            grid: GridConfig::default(),
            objective: None,
            kappas: Vec::new(),
            monte_carlo: MonteCarloConfig::default(),
            bootstrap: None,
            solver: SolverOptions::default(),
            output_dir: None,
            base_dir: None,
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub n_paths: Option<usize>,
    pub blocksize_years: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        cfg.validate()
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_kind(&e))))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Check every section; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let section = |name: &str, r: Result<()>| {
            r.map_err(|e| Error::Config(format!("[{name}] {}", strip_kind(&e))))
        };
        section("market", self.market.validate())?;
        section("scenario", self.scenario.validate())?;
        section("grid", self.grid.resolve(&self.market, &self.scenario).map(|_| ()))?;
        if let Some(obj) = &self.objective {
            section("objective", obj.validate())?;
        }
        for (k, &kappa) in self.kappas.iter().enumerate() {
            if !(kappa > 0.0) || !kappa.is_finite() {
                return Err(Error::Config(format!(
                    "kappas[{k}] = {kappa} must be strictly positive"
                )));
            }
        }
        section("solver", self.solver.validate(&self.scenario))?;
        let mc = &self.monte_carlo;
        if !(mc.alpha > 0.0 && mc.alpha < 1.0) {
            return Err(Error::Config(format!(
                "[monte_carlo] alpha = {} must lie in (0, 1)",
                mc.alpha
            )));
        }
        if let Some(b) = &self.bootstrap {
            b.validate()?;
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.monte_carlo.seed = seed;
            if let Some(b) = self.bootstrap.as_mut() {
                b.seed = seed;
            }
        }
        if let Some(n) = o.grid {
            self.grid.n_s = n;
            self.grid.n_b = n;
        }
        if let Some(n) = o.n_paths {
            self.monte_carlo.n_paths = n;
            if let Some(b) = self.bootstrap.as_mut() {
                b.n_paths = n;
            }
        }
        if let Some(years) = o.blocksize_years {
            match self.bootstrap.as_mut() {
                Some(b) => b.blocksize_years = years,
                None => {
                    return Err(Error::Config(
                        "--blocksize needs a [bootstrap] section".into(),
                    ))
                }
            }
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = Some(dir.clone());
        }
        self.validate()
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        self.grid.resolve(&self.market, &self.scenario)
    }

    pub fn stats_spec(&self, target: f64) -> StatsSpec {
        StatsSpec {
            alpha: self.monte_carlo.alpha,
            target,
            fan_paths: self.monte_carlo.fan_paths,
        }
    }

    /// Resolve a path from the config against the config file's directory.
    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::Argument(m) | Error::Domain(m) | Error::Config(m) | Error::Format(m) | Error::Data(m) => {
            m.clone()
        }
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in_base_case() {
        let cfg = RunConfig::from_toml_str("[grid]\nn_s = 64\nn_b = 64\n").unwrap();
        assert_eq!(cfg.scenario, Scenario::base_case());
        assert_eq!(cfg.market, MarketParams::crsp_tbill());
        assert!(cfg.objective.is_none());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig {
            objective: Some(ObjectiveSpec::linear_shortfall(0.0, 30.0)),
            kappas: vec![1.0, 2.0],
            ..RunConfig::default()
        };
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn bad_keys_and_values_are_config_errors() {
        let e = RunConfig::from_toml_str("[scenario]\nT = 30.0\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("bogus")), "{e}");
        let e = RunConfig::from_toml_str("kappas = [1.0, -2.0]\n").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("kappas[1]")), "{e}");
        let e = RunConfig::from_toml_str("[grid]\nn_s = 100\nn_b = 64\n").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("[grid]")), "{e}");
    }

    #[test]
    fn overrides_reach_nested_sections() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            seed: Some(9),
            grid: Some(128),
            n_paths: Some(10),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.monte_carlo.seed, 9);
        assert_eq!(cfg.grid.n_s, 128);
        assert!(cfg
            .apply(&Overrides {
                blocksize_years: Some(1.0),
                ..Overrides::default()
            })
            .is_err());
    }
}
