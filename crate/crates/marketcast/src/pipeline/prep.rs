//! Shared data preparation for the pipeline commands: load markets, pick the
//! surveillance series, reconstruct snapshots, resolve outcomes, and build
//! hub and ARIMA comparators per event.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rayon::prelude::*;

use crate::baselines::{
    self, fit_auto_arima, gaussian_to_bins, incident_to_cumulative, quantiles_to_bins,
    ArimaOrder, HubForecast,
};
use crate::bins::{BinPartition, Outcome, PredictiveDistribution};
use crate::contracts::{self, MarketSnapshot};
use crate::ingest::{
    self, ApiConfig, IngestError, MarketRecord, PriceHistoryClient, ReqwestTransport, Transport,
    TransportResponse,
};
use crate::surveillance::{ingest_snapshots, resolve_outcome, SurveillanceSeries};

use super::{PipelineError, RunConfig};

const SECONDS_PER_WEEK: i64 = 7 * 24 * 3600;

pub(crate) struct EventData {
    pub market_id: String,
    pub partition: BinPartition,
    pub snapshots: Vec<MarketSnapshot>,
    pub skipped_degenerate: usize,
    pub outcome: Outcome,
    /// Per hub model, the matched forecast discretized onto the partition,
    /// with the submission reference time.
    pub hub_dists: BTreeMap<String, (DateTime<Utc>, PredictiveDistribution)>,
    pub arima: Option<(ArimaOrder, PredictiveDistribution)>,
}

pub(crate) struct Prepared {
    pub events: Vec<EventData>,
    pub records: Vec<MarketRecord>,
    pub series: SurveillanceSeries,
    pub hub_models: Vec<String>,
    pub warnings: Vec<String>,
}

struct OfflineTransport;

impl Transport for OfflineTransport {
    fn get(&self, url: &str, _headers: &[(String, String)]) -> Result<TransportResponse, IngestError> {
        Err(IngestError::Transport(format!(
            "offline mode: refusing to fetch {url}"
        )))
    }
}

fn load_markets(config: &RunConfig) -> Result<Vec<MarketRecord>, PipelineError> {
    if let Some(fixture) = &config.fixture {
        return Ok(ingest::load_fixture(fixture)?);
    }
    let descriptor_path = config
        .markets
        .as_ref()
        .expect("config validation guarantees a market source");
    let descriptors = ingest::MarketDescriptor::load_list(descriptor_path)?;
    let transport: Arc<dyn Transport> = if config.offline {
        Arc::new(OfflineTransport)
    } else {
        Arc::new(ReqwestTransport::new(Duration::from_secs(30))?)
    };
    let api = if config.offline {
        ApiConfig::new("offline://unused")
    } else {
        ApiConfig::from_env()?
    };
    let client = PriceHistoryClient::new(transport, api);
    let mut records = Vec::with_capacity(descriptors.len());
    for descriptor in &descriptors {
        records.push(ingest::load_or_fetch(
            descriptor,
            &client,
            &config.cache_dir,
            config.offline,
            config.fidelity_min,
        )?);
    }
    records.sort_by(|a, b| a.market_id.cmp(&b.market_id));
    Ok(records)
}

fn pick_series(config: &RunConfig) -> Result<SurveillanceSeries, PipelineError> {
    let mut all = ingest_snapshots(&config.surveillance)?;
    match &config.target_key {
        Some(key) => all.remove(key).ok_or_else(|| {
            PipelineError::Config(format!(
                "target_key {key:?} not found in {}; available: {:?}",
                config.surveillance.display(),
                all.keys().collect::<Vec<_>>()
            ))
        }),
        None => {
            if all.len() == 1 {
                Ok(all.into_values().next().unwrap())
            } else {
                Err(PipelineError::Config(format!(
                    "surveillance store has {} series; set target_key (available: {:?})",
                    all.len(),
                    all.keys().collect::<Vec<_>>()
                )))
            }
        }
    }
}

/// Latest hub submission whose target date lands within three days of the
/// market's resolution date.
fn match_hub_forecast<'a>(
    forecasts: &'a [HubForecast],
    model_id: &str,
    resolution: DateTime<Utc>,
) -> Option<&'a HubForecast> {
    let resolution_date = resolution.date_naive();
    forecasts
        .iter()
        .filter(|f| f.model_id == model_id)
        .filter(|f| {
            let gap = (f.target_date() - resolution_date).num_days().abs();
            gap <= 3
        })
        .max_by_key(|f| f.reference_date)
}

fn build_event(
    record: &MarketRecord,
    series: &SurveillanceSeries,
    hub: &[HubForecast],
    hub_models: &[String],
    config: &RunConfig,
    warnings: &mut Vec<String>,
) -> Result<Option<EventData>, PipelineError> {
    let partition = contracts::market_partition(record)?;
    let snapshot_run = contracts::snapshot_series(record, &partition, config.fidelity_min)?;
    if snapshot_run.snapshots.is_empty() {
        warnings.push(format!(
            "market {}: no scorable snapshots ({} degenerate grid points); skipped",
            record.market_id, snapshot_run.skipped_degenerate
        ));
        return Ok(None);
    }
    let outcome = resolve_outcome(record, series, &partition)?;

    let mut hub_dists = BTreeMap::new();
    for model_id in hub_models {
        let Some(forecast) = match_hub_forecast(hub, model_id, record.resolution_time) else {
            warnings.push(format!(
                "market {}: no {model_id} submission targets its resolution week",
                record.market_id
            ));
            continue;
        };
        let reference_time = forecast.forecast.reference_time;
        let Some(last_cumulative) = series.value_as_of(reference_time) else {
            warnings.push(format!(
                "market {}: no surveillance vintage at {model_id} reference {reference_time}",
                record.market_id
            ));
            continue;
        };
        let cumulative = incident_to_cumulative(&forecast.forecast, last_cumulative, config.kappa);
        let dist = quantiles_to_bins(&cumulative, &partition)?;
        hub_dists.insert(model_id.clone(), (reference_time, dist));
    }

    let arima = match arima_comparator(record, series, &snapshot_run.snapshots, config) {
        Ok(result) => result,
        Err(PipelineError::Baselines(baselines::BaselineError::TooShort { len, needed })) => {
            warnings.push(format!(
                "market {}: surveillance history too short for the statistical baseline ({len} < {needed})",
                record.market_id
            ));
            None
        }
        Err(e) => return Err(e),
    };

    Ok(Some(EventData {
        market_id: record.market_id.clone(),
        partition,
        snapshots: snapshot_run.snapshots,
        skipped_degenerate: snapshot_run.skipped_degenerate,
        outcome,
        hub_dists,
        arima,
    }))
}

/// Fits the ARIMA baseline to the vintage series known when the market
/// opened, forecasts to the settlement week, and discretizes the Gaussian
/// forecast onto the market partition.
fn arima_comparator(
    record: &MarketRecord,
    series: &SurveillanceSeries,
    snapshots: &[MarketSnapshot],
    config: &RunConfig,
) -> Result<Option<(ArimaOrder, PredictiveDistribution)>, PipelineError> {
    let open_time = snapshots[0].time;
    let known: Vec<&crate::surveillance::SurveillanceSnapshot> = series
        .snapshots()
        .iter()
        .take_while(|s| s.published <= open_time)
        .collect();
    let Some(last) = known.last() else {
        return Ok(None);
    };
    let history: Vec<f64> = known.iter().map(|s| s.value).collect();
    let model = fit_auto_arima(&history, &config.arima)?;
    let gap = record.resolution_time.timestamp() - last.published.timestamp();
    let horizon = (gap.max(1) as f64 / SECONDS_PER_WEEK as f64).ceil() as usize;
    let forecast = baselines::arima_forecast(&model, &history, horizon.max(1));
    let point = forecast.last().expect("horizon >= 1");
    let dist = gaussian_to_bins(point.mean, point.variance, &contracts::market_partition(record)?);
    Ok(Some((model.order, dist)))
}

pub(crate) fn prepare(config: &RunConfig) -> Result<Prepared, PipelineError> {
    let records = load_markets(config)?;
    if records.is_empty() {
        return Err(PipelineError::Config("no markets to evaluate".into()));
    }
    let series = pick_series(config)?;

    let (hub, hub_models) = match &config.hub_forecasts {
        Some(path) => {
            let forecasts = baselines::parse_hub_csv(path, &config.hub_target)?;
            let mut models: Vec<String> = forecasts.iter().map(|f| f.model_id.clone()).collect();
            models.sort();
            models.dedup();
            (forecasts, models)
        }
        None => (Vec::new(), Vec::new()),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))?;
    let results: Vec<(Result<Option<EventData>, PipelineError>, Vec<String>)> =
        pool.install(|| {
            records
                .par_iter()
                .map(|record| {
                    let mut warnings = Vec::new();
                    let event =
                        build_event(record, &series, &hub, &hub_models, config, &mut warnings);
                    (event, warnings)
                })
                .collect()
        });

    let mut events = Vec::with_capacity(records.len());
    let mut warnings = Vec::new();
    for (result, event_warnings) in results {
        warnings.extend(event_warnings);
        if let Some(event) = result? {
            events.push(event);
        }
    }
    if events.is_empty() {
        return Err(PipelineError::Config(
            "no markets produced scorable events".into(),
        ));
    }
    events.sort_by(|a, b| a.market_id.cmp(&b.market_id));

    Ok(Prepared {
        events,
        records,
        series,
        hub_models,
        warnings,
    })
}
