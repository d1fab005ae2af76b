//! Run metadata: every convention a number in the outputs depends on, so
//! results stay interpretable and reproducible.

use serde::{Deserialize, Serialize};

use super::RunConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub disease: String,
    pub log_clamp_epsilon: f64,
    pub crps_convention: String,
    pub percentile_conventions: Vec<String>,
    pub price_convention: String,
    pub publication_time_convention: String,
    pub alpha_tie_break: String,
    pub fidelity_min: u32,
    pub kappa: f64,
    pub grid_step: f64,
    pub seed: u64,
}

impl RunMetadata {
    pub fn from_config(config: &RunConfig) -> Self {
        Self {
            tool: "marketcast".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            disease: config.disease.to_string(),
            log_clamp_epsilon: crate::evaluation::LOG_CLAMP_EPSILON,
            crps_convention: "width-weighted squared CDF difference over bounded bins; open top bin contributes zero".into(),
            percentile_conventions: vec![
                "strict: percent of hub models strictly beaten".into(),
                "weak: percent of hub models beaten or tied".into(),
            ],
            price_convention: "API history price used as-is (no bid/ask reconstruction)".into(),
            publication_time_convention: "date-only publications stamped 12:00 UTC".into(),
            alpha_tie_break: "ties broken toward larger alpha (the ensemble)".into(),
            fidelity_min: config.fidelity_min,
            kappa: config.kappa,
            grid_step: config.grid_step,
            seed: config.seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata serializes")
    }
}
