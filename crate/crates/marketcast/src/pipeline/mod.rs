//! End-to-end orchestration: configuration, the evaluate/combine/diagnose/
//! report commands, SVG figures, and run metadata.

mod combine;
mod config;
mod diagnose;
mod evaluate;
mod figures;
mod metadata;
mod prep;
mod report;

pub use combine::{cmd_combine, CombineOutputs, CombineSummary};
pub use config::{ArimaSection, RunConfig};
pub use diagnose::{cmd_diagnose, DiagnoseOutputs, ImpossibleMassRow, MonotonicityRow};
pub use evaluate::{cmd_evaluate, AggregateRow, EvaluateOutputs, PercentileRow, ARIMA_MODEL_ID, MARKET_MODEL_ID};
pub use metadata::RunMetadata;
pub use report::cmd_report;

use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Surveillance(#[from] crate::surveillance::SurveillanceError),
    #[error(transparent)]
    Contracts(#[from] crate::contracts::ContractError),
    #[error(transparent)]
    Baselines(#[from] crate::baselines::BaselineError),
    #[error(transparent)]
    Eval(#[from] crate::evaluation::EvalError),
    #[error(transparent)]
    Bin(#[from] crate::bins::BinError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing artifacts: {0:?}")]
    MissingArtifacts(Vec<String>),
    #[error("{file}:{line}: {detail}")]
    Schema {
        file: String,
        line: u64,
        detail: String,
    },
}

impl PipelineError {
    /// Process exit code: 0 success, 1 configuration, 2 data/schema,
    /// 3 network.
    pub fn exit_code(&self) -> i32 {
        use crate::ingest::IngestError;
        match self {
            PipelineError::Config(_) | PipelineError::MissingArtifacts(_) => 1,
            PipelineError::Ingest(e) => match e {
                IngestError::Http { .. }
                | IngestError::RateLimited { .. }
                | IngestError::Transport(_) => 3,
                IngestError::CacheMiss { .. } | IngestError::Config(_) => 1,
                _ => 2,
            },
            PipelineError::Io(_) => 1,
            _ => 2,
        }
    }
}

/// Populates the market cache from the price-history API. Requires a market
/// descriptor file and network access.
pub fn cmd_fetch(config: &RunConfig) -> Result<usize, PipelineError> {
    if config.offline {
        return Err(PipelineError::Config(
            "fetch requires network access; remove --offline".into(),
        ));
    }
    let descriptor_path = config.markets.as_ref().ok_or_else(|| {
        PipelineError::Config("fetch requires `markets` (a descriptor file) in config".into())
    })?;
    let descriptors = crate::ingest::MarketDescriptor::load_list(descriptor_path)?;
    let transport = Arc::new(crate::ingest::ReqwestTransport::new(Duration::from_secs(30))?);
    let client = crate::ingest::PriceHistoryClient::new(transport, crate::ingest::ApiConfig::from_env()?);
    let mut fetched = 0;
    for descriptor in &descriptors {
        crate::ingest::load_or_fetch(
            descriptor,
            &client,
            &config.cache_dir,
            false,
            config.fidelity_min,
        )?;
        fetched += 1;
    }
    Ok(fetched)
}
