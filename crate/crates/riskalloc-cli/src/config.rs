//! Run configuration: flag/file merging, validation, and the error type
//! every command funnels into.
//!
//! - flags win over config-file values, which win over built-in defaults
//! - a previous JSON report is a valid config file (its embedded `config`
//!   block is used), which is what makes reports re-ingestable
//! - the resolved [`RunConfig`] is echoed verbatim into every report, so a
//!   rerun from that echo reproduces the report byte for byte

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use riskalloc::measures::{RewardMeasureSpec, RiskMeasureSpec};
use riskalloc::suitability::{default_h_grid, HGrid};
use riskalloc::{ScenarioSet, DEFAULT_FD_STEP, DEFAULT_TOL};

use crate::args::CommonArgs;
use crate::specs;

/// Default seed for randomized audits.
pub const DEFAULT_SEED: u64 = 7;

/// Anything that stops a command before it can produce a verdict.
#[derive(Debug, Error)]
pub enum CliError {
    /// Library-level evaluation or validation failure.
    #[error("{0}")]
    Lib(#[from] riskalloc::Error),
    /// Library failure while reading a specific file.
    #[error("{path}: {source}")]
    Data {
        path: PathBuf,
        #[source]
        source: riskalloc::Error,
    },
    /// Filesystem failure with the offending path.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Config file that does not parse as JSON of the expected shape.
    #[error("config file {path}: {message}")]
    Config { path: PathBuf, message: String },
    /// A required setting that neither a flag nor the config file provided.
    #[error("missing required setting `{0}`; pass --{0} or set it in --config")]
    Missing(&'static str),
    /// A compact or JSON measure spec that does not parse.
    #[error("invalid {what} spec {text:?}: {message}")]
    Spec {
        what: &'static str,
        text: String,
        message: String,
    },
    /// A flag value with a dedicated grammar that does not parse.
    #[error("invalid {what} {text:?}: {message}")]
    Flag {
        what: &'static str,
        text: String,
        message: String,
    },
    /// Report serialization failure.
    #[error("serializing report: {0}")]
    Json(#[from] serde_json::Error),
}

/// Fully resolved settings; embedded as the `config` block of every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Scenario CSV file.
    pub scenarios: PathBuf,
    /// Risk measure spec in compact form or inline JSON.
    pub risk: String,
    /// Reward measure spec in compact form or inline JSON.
    pub reward: String,
    /// Decreasing step grid for the existential verifiers.
    pub grid: Vec<f64>,
    /// Centered finite-difference step.
    pub step: f64,
    /// Verification tolerance.
    pub tol: f64,
    /// Seed for randomized audits.
    pub seed: u64,
}

/// Config-file shape: every field optional so files can be partial.
#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    scenarios: Option<PathBuf>,
    risk: Option<String>,
    reward: Option<String>,
    grid: Option<Vec<f64>>,
    step: Option<f64>,
    tol: Option<f64>,
    seed: Option<u64>,
}

/// Reads a config file, accepting either a bare config object or a full
/// report whose `config` block is then used.
fn read_file_config(path: &PathBuf) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let block = match value.get("config") {
        Some(inner) => inner.clone(),
        None => value,
    };
    serde_json::from_value(block).map_err(|e| CliError::Config {
        path: path.clone(),
        message: e.to_string(),
    })
}

impl RunConfig {
    /// Merges flags over the optional config file over defaults, then
    /// validates every field.
    pub fn resolve(common: &CommonArgs) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(path) => read_file_config(path)?,
            None => FileConfig::default(),
        };
        let scenarios = common
            .scenarios
            .clone()
            .or(file.scenarios)
            .ok_or(CliError::Missing("scenarios"))?;
        if let Err(source) = fs::metadata(&scenarios) {
            return Err(CliError::Io {
                path: scenarios,
                source,
            });
        }
        let grid = match &common.grid {
            Some(text) => specs::parse_grid(text)?,
            None => file
                .grid
                .unwrap_or_else(|| default_h_grid().steps().to_vec()),
        };
        let config = RunConfig {
            scenarios,
            risk: common
                .risk
                .clone()
                .or(file.risk)
                .unwrap_or_else(|| "es:0.25".to_string()),
            reward: common
                .reward
                .clone()
                .or(file.reward)
                .unwrap_or_else(|| "expectation".to_string()),
            grid,
            step: common.step.or(file.step).unwrap_or(DEFAULT_FD_STEP),
            tol: common.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
            seed: common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        };
        config.validate()?;
        Ok(config)
    }

    /// Rejects out-of-range tolerances, steps, and grids up front.
    fn validate(&self) -> Result<(), CliError> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(CliError::Flag {
                what: "tolerance",
                text: format!("{}", self.tol),
                message: "must be finite and > 0".to_string(),
            });
        }
        if !(self.step.is_finite() && self.step > 0.0 && self.step <= 0.1) {
            return Err(CliError::Flag {
                what: "step",
                text: format!("{}", self.step),
                message: "must lie in (0, 0.1]".to_string(),
            });
        }
        self.hgrid()?;
        self.risk_spec()?;
        self.reward_spec()?;
        Ok(())
    }

    /// Parses the risk spec string.
    pub fn risk_spec(&self) -> Result<RiskMeasureSpec, CliError> {
        specs::parse_risk(&self.risk)
    }

    /// Parses the reward spec string.
    pub fn reward_spec(&self) -> Result<RewardMeasureSpec, CliError> {
        specs::parse_reward(&self.reward)
    }

    /// Validates the grid into the library's step-grid type.
    pub fn hgrid(&self) -> Result<HGrid, CliError> {
        HGrid::new(self.grid.clone()).map_err(CliError::from)
    }

    /// Loads the scenario CSV, attaching the path to any failure.
    pub fn load_scenarios(&self) -> Result<ScenarioSet, CliError> {
        ScenarioSet::from_csv_path(&self.scenarios).map_err(|source| CliError::Data {
            path: self.scenarios.clone(),
            source,
        })
    }
}
