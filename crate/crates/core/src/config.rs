//! Flat TOML run configuration. Every key is optional; unknown keys are
//! rejected.
//!
//! ```toml
//! maturity = 10.0
//! rate = 0.04
//! alpha = 0.1
//! rho = 0.0
//! q_mort = 0.0
//! insured_drift = 0.04
//! insured_vol = 0.1
//! insured_floor = 0.02
//! lambda_p0 = 0.06
//! # reference_* and lambda_i0 default to the insured values
//! grid_m = 8.0
//! grid_i = 640
//! grid_j = 1000
//! rho_sweep = [-1.0, -0.5, 0.0, 0.5, 1.0]
//! q_sweep = [-0.05, 0.0, 0.09, 0.15]
//! n_contracts = [1, 2, 5, 10]
//! mc_paths = 200000
//! mc_steps = 500
//! seed = 42
//! hedge_n_insured = [1]
//! hedge_paths = 200000
//! hedge_steps = 1
//! hedge_dt = 0.002
//! ```
//!
//! `lambda_p0 = 0.06` puts the single-life price near 0.435 and the limiting
//! per-contract price near 0.343 on the default grid.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::Error;
use crate::fd::{build_grid, Grid1D};
use crate::model::{validate, HazardParams, MarketSpec, Model, PopulationPair};

pub const DEFAULT_LAMBDA_P0: f64 = 0.06;

/// Configuration problems; all map to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("key `{key}`: {source}")]
    Invalid { key: &'static str, source: Error },
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub maturity: Option<f64>,
    pub rate: Option<f64>,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub q_mort: Option<f64>,
    pub insured_drift: Option<f64>,
    pub insured_vol: Option<f64>,
    pub insured_floor: Option<f64>,
    pub lambda_p0: Option<f64>,
    pub reference_drift: Option<f64>,
    pub reference_vol: Option<f64>,
    pub reference_floor: Option<f64>,
    pub lambda_i0: Option<f64>,
    pub grid_m: Option<f64>,
    pub grid_i: Option<usize>,
    pub grid_j: Option<usize>,
    pub rho_sweep: Option<Vec<f64>>,
    pub q_sweep: Option<Vec<f64>>,
    pub n_contracts: Option<Vec<u32>>,
    pub mc_paths: Option<usize>,
    pub mc_steps: Option<usize>,
    pub seed: Option<u64>,
    pub hedge_n_insured: Option<Vec<u32>>,
    pub hedge_paths: Option<usize>,
    pub hedge_steps: Option<usize>,
    pub hedge_dt: Option<f64>,
    pub output: Option<PathBuf>,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub grid: Grid1D,
    pub rho_sweep: Vec<f64>,
    pub q_sweep: Vec<f64>,
    pub n_contracts: Vec<u32>,
    pub mc_paths: usize,
    pub mc_steps: usize,
    pub seed: u64,
    pub hedge_n_insured: Vec<u32>,
    pub hedge_paths: usize,
    pub hedge_steps: usize,
    pub hedge_dt: f64,
    pub output: Option<PathBuf>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_m: Option<f64>,
    pub grid_i: Option<usize>,
    pub grid_j: Option<usize>,
    pub output: Option<PathBuf>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn resolve(self, ov: &Overrides) -> Result<RunConfig, ConfigError> {
        let maturity = self.maturity.unwrap_or(10.0);
        let insured = HazardParams::new(
            self.insured_drift.unwrap_or(0.04),
            self.insured_vol.unwrap_or(0.1),
            self.insured_floor.unwrap_or(0.02),
        );
        let lambda_p0 = self.lambda_p0.unwrap_or(DEFAULT_LAMBDA_P0);
        let reference = HazardParams::new(
            self.reference_drift.unwrap_or(insured.drift),
            self.reference_vol.unwrap_or(insured.vol),
            self.reference_floor.unwrap_or(insured.floor),
        );
        let spec = MarketSpec {
            rate: self.rate.unwrap_or(0.04),
            q_mort: self.q_mort.unwrap_or(0.0),
            alpha: self.alpha.unwrap_or(0.1),
            rho: self.rho.unwrap_or(0.0),
            maturity,
        };
        let pops = PopulationPair {
            insured,
            reference,
            initial_insured: lambda_p0,
            initial_reference: self.lambda_i0.unwrap_or(lambda_p0),
        };
        let model = validate(spec, pops).map_err(|e| ConfigError::Invalid {
            key: key_of(&e),
            source: e,
        })?;

        let grid_j = ov
            .grid_j
            .or(self.grid_j)
            .unwrap_or_else(|| ((maturity / 0.01).round() as usize).max(1));
        let grid = build_grid(
            ov.grid_m.or(self.grid_m).unwrap_or(8.0),
            ov.grid_i.or(self.grid_i).unwrap_or(640),
            grid_j,
            maturity,
        )
        .map_err(|e| ConfigError::Invalid {
            key: match e {
                Error::NonPositiveDimension("half_width") => "grid_m",
                Error::NonPositiveDimension("steps") => "grid_j",
                _ => "grid_i",
            },
            source: e,
        })?;

        let positive = |key: &'static str, v: usize| {
            if v == 0 {
                Err(ConfigError::Invalid {
                    key,
                    source: Error::NonPositiveDimension(key),
                })
            } else {
                Ok(v)
            }
        };
        let nonempty_lives = |key: &'static str, v: Vec<u32>| {
            if v.is_empty() || v.contains(&0) {
                Err(ConfigError::Invalid {
                    key,
                    source: Error::InvalidArgument("need a nonempty list of positive counts".into()),
                })
            } else {
                Ok(v)
            }
        };
        let hedge_dt = self.hedge_dt.unwrap_or(0.002);
        if !(hedge_dt > 0.0 && hedge_dt <= maturity) {
            return Err(ConfigError::Invalid {
                key: "hedge_dt",
                source: Error::InvalidArgument(format!("{hedge_dt} must lie in (0, T]")),
            });
        }
        let rho_sweep = self.rho_sweep.unwrap_or_else(|| vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        if let Some(&r) = rho_sweep.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
            return Err(ConfigError::Invalid {
                key: "rho_sweep",
                source: Error::RhoOutOfRange(r),
            });
        }
        let q_sweep = self.q_sweep.unwrap_or_else(|| vec![-0.05, 0.0, 0.09, 0.15]);
        if q_sweep.iter().any(|q| !q.is_finite()) {
            return Err(ConfigError::Invalid {
                key: "q_sweep",
                source: Error::NonFinite("q_sweep"),
            });
        }

        Ok(RunConfig {
            model,
            grid,
            rho_sweep,
            q_sweep,
            n_contracts: nonempty_lives("n_contracts", self.n_contracts.unwrap_or_else(|| vec![1, 2, 5, 10]))?,
            mc_paths: positive("mc_paths", self.mc_paths.unwrap_or(200_000))?,
            mc_steps: positive("mc_steps", self.mc_steps.unwrap_or(500))?,
            seed: ov.seed.or(self.seed).unwrap_or(42),
            hedge_n_insured: nonempty_lives("hedge_n_insured", self.hedge_n_insured.unwrap_or_else(|| vec![1]))?,
            hedge_paths: positive("hedge_paths", self.hedge_paths.unwrap_or(200_000))?,
            hedge_steps: positive("hedge_steps", self.hedge_steps.unwrap_or(1))?,
            hedge_dt,
            output: ov.output.clone().or(self.output),
        })
    }
}

impl RunConfig {
    /// Study defaults with no file.
    pub fn defaults() -> Result<Self, ConfigError> {
        RawConfig::default().resolve(&Overrides::default())
    }

    pub fn lambda_p0(&self) -> f64 {
        self.model.pops().initial_insured
    }
}

fn key_of(e: &Error) -> &'static str {
    match e {
        Error::AlphaTooLarge { .. } | Error::NegativeSharpe(_) => "alpha",
        Error::RhoOutOfRange(_) => "rho",
        Error::NonPositiveVolatility { population: "insured", .. } => "insured_vol",
        Error::NonPositiveVolatility { .. } => "reference_vol",
        Error::NonPositiveFloor { population: "insured", .. } => "insured_floor",
        Error::NonPositiveFloor { .. } => "reference_floor",
        Error::InitialBelowFloor { population: "insured", .. } => "lambda_p0",
        Error::InitialBelowFloor { .. } => "lambda_i0",
        Error::NonPositiveMaturity(_) => "maturity",
        Error::NegativeRate(_) => "rate",
        Error::NonFinite(k) => k,
        _ => "config",
    }
}
