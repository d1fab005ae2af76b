//! The `combine` command: convex-combination weight search between the hub
//! ensemble and the market, per scoring rule, with an alpha-curve figure.

use serde::Serialize;

use crate::evaluation::{optimize_alpha_weighted, AlphaEvent, CombinationCurve, Metric};

use super::evaluate::{csv_string, write_atomic};
use super::figures::{self, Marker, Panel};
use super::metadata::RunMetadata;
use super::prep::prepare;
use super::{PipelineError, RunConfig};

#[derive(Debug, Clone, Serialize)]
struct CurveRow {
    metric: String,
    alpha: f64,
    mean_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CombineSummary {
    pub metric: String,
    pub alpha_star: f64,
    pub score_at_star: f64,
    pub score_ensemble_only: f64,
    pub score_market_only: f64,
}

#[derive(Debug)]
pub struct CombineOutputs {
    pub curves: Vec<CombinationCurve>,
    pub summaries: Vec<CombineSummary>,
    pub n_events: usize,
    pub warnings: Vec<String>,
}

impl CombineOutputs {
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for s in &self.summaries {
            lines.push(format!(
                "{}: alpha* = {:.2}  score {:.4} (ensemble alone {:.4}, market alone {:.4})",
                s.metric, s.alpha_star, s.score_at_star, s.score_ensemble_only, s.score_market_only
            ));
        }
        lines.push(format!("{} events combined", self.n_events));
        for warning in &self.warnings {
            lines.push(format!("warning: {warning}"));
        }
        lines
    }
}

/// Builds per-snapshot combination events, weighting each snapshot by
/// 1/n so every market event contributes equally, and scans the alpha grid
/// for each metric. Writes `combine_curves.csv`, `combine_summary.json`, and
/// `alpha_curves.svg`.
pub fn cmd_combine(config: &RunConfig) -> Result<CombineOutputs, PipelineError> {
    if config.hub_forecasts.is_none() {
        return Err(PipelineError::Config(
            "combine requires hub_forecasts (the ensemble side of the combination)".into(),
        ));
    }
    let prepared = prepare(config)?;
    let ensemble_id = &config.ensemble_model;

    let mut events = Vec::new();
    let mut n_events = 0usize;
    let mut warnings = prepared.warnings.clone();
    for event in &prepared.events {
        let Some((_, ensemble)) = event.hub_dists.get(ensemble_id) else {
            warnings.push(format!(
                "market {}: ensemble model {ensemble_id:?} has no matched forecast; skipped",
                event.market_id
            ));
            continue;
        };
        n_events += 1;
        let weight = 1.0 / event.snapshots.len() as f64;
        for snapshot in &event.snapshots {
            events.push(AlphaEvent {
                p_a: ensemble.clone(),
                p_b: snapshot.dist.clone(),
                y: event.outcome.bin_index,
                weight,
            });
        }
    }
    if events.is_empty() {
        return Err(PipelineError::Config(format!(
            "no events pair the market with ensemble model {ensemble_id:?}"
        )));
    }

    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for metric in Metric::ALL {
        let curve = optimize_alpha_weighted(&events, metric, config.grid_step, true)?;
        let star_index = curve
            .alphas
            .iter()
            .position(|&a| a == curve.alpha_star)
            .expect("alpha_star on the grid");
        summaries.push(CombineSummary {
            metric: metric.to_string(),
            alpha_star: curve.alpha_star,
            score_at_star: curve.scores[star_index],
            score_ensemble_only: *curve.scores.last().expect("grid non-empty"),
            score_market_only: curve.scores[0],
        });
        for (alpha, score) in curve.alphas.iter().zip(&curve.scores) {
            rows.push(CurveRow {
                metric: metric.to_string(),
                alpha: *alpha,
                mean_score: *score,
            });
        }
        curves.push(curve);
    }

    let panels: Vec<Panel> = curves
        .iter()
        .map(|curve| Panel {
            title: curve.metric.to_string(),
            x_label: "ensemble weight".into(),
            y_label: "mean score".into(),
            lines: vec![figures::Line {
                name: "combined".into(),
                points: curve.alphas.iter().copied().zip(curve.scores.iter().copied()).collect(),
            }],
            bars: None,
            markers: vec![Marker {
                label: format!("a*={:.2}", curve.alpha_star),
                x: curve.alpha_star,
                color: "#d62728",
            }],
        })
        .collect();

    let out = &config.output_dir;
    write_atomic(&out.join("combine_curves.csv"), &csv_string(&rows)?)?;
    write_atomic(
        &out.join("combine_summary.json"),
        &serde_json::to_string_pretty(&summaries).expect("summaries serialize"),
    )?;
    write_atomic(&out.join("alpha_curves.svg"), &figures::render(&panels))?;
    write_atomic(
        &out.join("run_metadata.json"),
        &RunMetadata::from_config(config).to_json(),
    )?;

    Ok(CombineOutputs {
        curves,
        summaries,
        n_events,
        warnings,
    })
}
