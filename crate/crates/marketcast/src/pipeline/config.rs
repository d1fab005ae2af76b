//! Run configuration, loaded from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::ArimaGridConfig;
use crate::ingest::Disease;

use super::PipelineError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub disease: Disease,
    /// Directory (or file) of market fixture documents.
    #[serde(default)]
    pub fixture: Option<PathBuf>,
    /// Market descriptor file for fetch/cache mode.
    #[serde(default)]
    pub markets: Option<PathBuf>,
    /// Surveillance snapshot CSV file or directory.
    pub surveillance: PathBuf,
    /// Target key within the surveillance store; optional when the store
    /// holds exactly one series.
    #[serde(default)]
    pub target_key: Option<String>,
    /// Hub forecast CSV (long format); enables hub scoring and combination.
    #[serde(default)]
    pub hub_forecasts: Option<PathBuf>,
    /// Hub target string to select rows by.
    #[serde(default = "default_hub_target")]
    pub hub_target: String,
    /// Which hub model plays the ensemble in combination curves.
    #[serde(default = "default_ensemble_model")]
    pub ensemble_model: String,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default)]
    pub offline: bool,
    #[serde(default = "default_fidelity")]
    pub fidelity_min: u32,
    /// Conversion factor from hub forecast units to target units.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub arima: ArimaSection,
}

/// ARIMA bounds as they appear in config files.
pub type ArimaSection = ArimaGridConfig;

fn default_hub_target() -> String {
    "wk inc flu hosp".into()
}

fn default_ensemble_model() -> String {
    "FluSight-ensemble".into()
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from(".marketcast-cache")
}

fn default_fidelity() -> u32 {
    60
}

fn default_kappa() -> f64 {
    1.0
}

fn default_grid_step() -> f64 {
    0.01
}

fn default_seed() -> u64 {
    0
}

fn default_workers() -> usize {
    4
}

impl RunConfig {
    /// Loads TOML (`.toml`) or JSON (anything else) and validates the
    /// invariants that do not require touching data files.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let config: RunConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.fixture.is_none() && self.markets.is_none() {
            return Err(PipelineError::Config(
                "one of `fixture` or `markets` is required".into(),
            ));
        }
        if self.fixture.is_some() && self.markets.is_some() {
            return Err(PipelineError::Config(
                "`fixture` and `markets` are mutually exclusive".into(),
            ));
        }
        if let Some(fixture) = &self.fixture {
            if !fixture.exists() {
                return Err(PipelineError::Config(format!(
                    "fixture path {} does not exist",
                    fixture.display()
                )));
            }
        }
        if !self.surveillance.exists() {
            return Err(PipelineError::Config(format!(
                "surveillance path {} does not exist",
                self.surveillance.display()
            )));
        }
        if let Some(hub) = &self.hub_forecasts {
            if !hub.exists() {
                return Err(PipelineError::Config(format!(
                    "hub forecast path {} does not exist",
                    hub.display()
                )));
            }
        }
        if self.fidelity_min == 0 {
            return Err(PipelineError::Config("fidelity_min must be >= 1".into()));
        }
        if !(self.kappa > 0.0) {
            return Err(PipelineError::Config("kappa must be positive".into()));
        }
        if self.workers == 0 {
            return Err(PipelineError::Config("workers must be >= 1".into()));
        }
        Ok(())
    }
}
