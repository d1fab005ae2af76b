//! The `evaluate` command: per-event and aggregate score tables for the
//! market, every hub model, and the ARIMA baseline, plus percentile ranks of
//! the market within the hub distribution.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::contracts::MarketSnapshot;
use crate::evaluation::{
    mean_compensated, percentile_rank, score_event, Metric, PercentileConvention, ScoreRecord,
};

use super::metadata::RunMetadata;
use super::prep::{prepare, EventData};
use super::{PipelineError, RunConfig};

pub const MARKET_MODEL_ID: &str = "market";
pub const ARIMA_MODEL_ID: &str = "arima";

#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub model_id: String,
    pub brier: f64,
    pub log_score: f64,
    pub crps: f64,
    pub n_events: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PercentileRow {
    pub metric: String,
    pub convention: String,
    pub market_percentile: f64,
    pub n_hub_models: usize,
}

#[derive(Debug)]
pub struct EvaluateOutputs {
    pub scores: Vec<ScoreRecord>,
    pub aggregates: Vec<AggregateRow>,
    pub percentiles: Vec<PercentileRow>,
    pub warnings: Vec<String>,
}

impl EvaluateOutputs {
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for row in &self.aggregates {
            lines.push(format!(
                "{}: brier {:.4}  log {:.4}  crps {:.4}  ({} events)",
                row.model_id, row.brier, row.log_score, row.crps, row.n_events
            ));
        }
        for row in &self.percentiles {
            lines.push(format!(
                "market percentile ({}, {}): {:.1}",
                row.metric, row.convention, row.market_percentile
            ));
        }
        for warning in &self.warnings {
            lines.push(format!("warning: {warning}"));
        }
        lines
    }
}

/// Wraps a bare distribution as a single-snapshot series so hub and ARIMA
/// forecasts flow through the same scoring path as markets.
fn single_snapshot(
    time: chrono::DateTime<chrono::Utc>,
    dist: crate::bins::PredictiveDistribution,
) -> MarketSnapshot {
    MarketSnapshot {
        time,
        dist,
        raw_sum: 1.0,
        monotonicity_violation: 0.0,
    }
}

fn score_one_event(event: &EventData) -> Result<Vec<ScoreRecord>, PipelineError> {
    let mut rows = Vec::new();
    rows.push(score_event(
        &event.market_id,
        MARKET_MODEL_ID,
        &event.snapshots,
        event.outcome.bin_index,
    )?);
    for (model_id, (reference_time, dist)) in &event.hub_dists {
        let snapshot = single_snapshot(*reference_time, dist.clone());
        rows.push(score_event(
            &event.market_id,
            model_id,
            std::slice::from_ref(&snapshot),
            event.outcome.bin_index,
        )?);
    }
    if let Some((_, dist)) = &event.arima {
        let snapshot = single_snapshot(event.snapshots[0].time, dist.clone());
        rows.push(score_event(
            &event.market_id,
            ARIMA_MODEL_ID,
            std::slice::from_ref(&snapshot),
            event.outcome.bin_index,
        )?);
    }
    Ok(rows)
}

fn aggregate(scores: &[ScoreRecord]) -> Vec<AggregateRow> {
    let mut by_model: BTreeMap<&str, Vec<&ScoreRecord>> = BTreeMap::new();
    for record in scores {
        by_model.entry(&record.model_id).or_default().push(record);
    }
    by_model
        .into_iter()
        .map(|(model_id, records)| {
            let briers: Vec<f64> = records.iter().map(|r| r.brier).collect();
            let logs: Vec<f64> = records.iter().map(|r| r.log_score).collect();
            let crpss: Vec<f64> = records.iter().map(|r| r.crps).collect();
            AggregateRow {
                model_id: model_id.to_string(),
                brier: mean_compensated(&briers),
                log_score: mean_compensated(&logs),
                crps: mean_compensated(&crpss),
                n_events: records.len(),
            }
        })
        .collect()
}

fn percentile_rows(
    aggregates: &[AggregateRow],
    hub_models: &[String],
) -> Result<Vec<PercentileRow>, PipelineError> {
    let market = aggregates
        .iter()
        .find(|row| row.model_id == MARKET_MODEL_ID)
        .expect("market always scored");
    let hub_rows: Vec<&AggregateRow> = aggregates
        .iter()
        .filter(|row| hub_models.contains(&row.model_id))
        .collect();
    if hub_rows.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for metric in Metric::ALL {
        let candidate = match metric {
            Metric::Brier => market.brier,
            Metric::LogScore => market.log_score,
            Metric::Crps => market.crps,
        };
        let hub_means: Vec<f64> = hub_rows
            .iter()
            .map(|row| match metric {
                Metric::Brier => row.brier,
                Metric::LogScore => row.log_score,
                Metric::Crps => row.crps,
            })
            .collect();
        for convention in [PercentileConvention::Strict, PercentileConvention::Weak] {
            out.push(PercentileRow {
                metric: metric.to_string(),
                convention: match convention {
                    PercentileConvention::Strict => "strict".into(),
                    PercentileConvention::Weak => "weak".into(),
                },
                market_percentile: percentile_rank(candidate, &hub_means, convention)?,
                n_hub_models: hub_means.len(),
            });
        }
    }
    Ok(out)
}

pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub(crate) fn csv_string<S: Serialize>(rows: &[S]) -> Result<String, PipelineError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| PipelineError::Schema {
                file: "<csv output>".into(),
                line: 0,
                detail: e.to_string(),
            })?;
    }
    let bytes = writer.into_inner().expect("csv flush");
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Runs the full scoring pipeline and writes `scores.csv`, `aggregate.csv`,
/// `percentiles.csv`, and `run_metadata.json` under the output directory.
/// Every file is staged and renamed, so partial results are never visible.
pub fn cmd_evaluate(config: &RunConfig) -> Result<EvaluateOutputs, PipelineError> {
    let prepared = prepare(config)?;

    let mut scores: Vec<ScoreRecord> = Vec::new();
    for event in &prepared.events {
        scores.extend(score_one_event(event)?);
    }
    scores.sort_by(|a, b| (&a.event_id, &a.model_id).cmp(&(&b.event_id, &b.model_id)));
    let aggregates = aggregate(&scores);
    let percentiles = percentile_rows(&aggregates, &prepared.hub_models)?;

    let out = &config.output_dir;
    write_atomic(&out.join("scores.csv"), &csv_string(&scores)?)?;
    write_atomic(&out.join("aggregate.csv"), &csv_string(&aggregates)?)?;
    write_atomic(&out.join("percentiles.csv"), &csv_string(&percentiles)?)?;
    write_atomic(
        &out.join("run_metadata.json"),
        &RunMetadata::from_config(config).to_json(),
    )?;

    Ok(EvaluateOutputs {
        scores,
        aggregates,
        percentiles,
        warnings: prepared.warnings,
    })
}

pub(crate) fn outputs_dir_file(config: &RunConfig, name: &str) -> PathBuf {
    config.output_dir.join(name)
}
