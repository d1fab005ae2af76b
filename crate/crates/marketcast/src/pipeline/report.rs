//! The `report` command: one self-contained HTML document assembled from the
//! artifacts the other commands wrote — score tables with a hub histogram,
//! alpha curves, diagnostics, and the full run-metadata block.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::evaluate::{write_atomic, ARIMA_MODEL_ID, MARKET_MODEL_ID};
use super::figures::{self, histogram_bars, Marker, Panel};
use super::{PipelineError, RunConfig};

struct Csv {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_csv(path: &Path) -> Result<Csv, PipelineError> {
    let shown = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| PipelineError::Schema {
        file: shown.clone(),
        line: 0,
        detail: e.to_string(),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| PipelineError::Schema {
            file: shown.clone(),
            line: 1,
            detail: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| PipelineError::Schema {
            file: shown.clone(),
            line: e
                .position()
                .map_or(0, |p| p.line()),
            detail: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(PipelineError::Schema {
                file: shown.clone(),
                line,
                detail: format!("expected {} fields, got {}", headers.len(), record.len()),
            });
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(Csv { headers, rows })
}

fn field<'a>(csv: &'a Csv, row: &'a [String], name: &str, path: &Path) -> Result<&'a str, PipelineError> {
    let idx = csv
        .headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| PipelineError::Schema {
            file: path.display().to_string(),
            line: 1,
            detail: format!("missing column {name:?}"),
        })?;
    Ok(&row[idx])
}

fn parse_f64(text: &str, path: &Path, line: usize) -> Result<f64, PipelineError> {
    text.parse().map_err(|e| PipelineError::Schema {
        file: path.display().to_string(),
        line: line as u64,
        detail: format!("bad number {text:?}: {e}"),
    })
}

fn html_table(csv: &Csv) -> String {
    let mut html = String::from("<table>\n<tr>");
    for header in &csv.headers {
        write!(html, "<th>{header}</th>").unwrap();
    }
    html.push_str("</tr>\n");
    for row in &csv.rows {
        html.push_str("<tr>");
        for cell in row {
            write!(html, "<td>{cell}</td>").unwrap();
        }
        html.push_str("</tr>\n");
    }
    html.push_str("</table>\n");
    html
}

fn placeholder(section: &str, command: &str) -> String {
    format!("<p class=\"placeholder\">{section} not available — run <code>marketcast {command}</code> first.</p>\n")
}

/// Histogram of hub aggregate scores with market (and ensemble) markers,
/// mirroring the score-distribution panel of the headline figure.
fn score_histogram(
    aggregate: &Csv,
    path: &Path,
    ensemble_model: &str,
) -> Result<Option<String>, PipelineError> {
    let mut panels = Vec::new();
    for metric in ["brier", "log_score"] {
        let mut hub_scores = Vec::new();
        let mut market = None;
        let mut ensemble = None;
        for (i, row) in aggregate.rows.iter().enumerate() {
            let model = field(aggregate, row, "model_id", path)?;
            let value = parse_f64(field(aggregate, row, metric, path)?, path, i + 2)?;
            match model {
                MARKET_MODEL_ID => market = Some(value),
                ARIMA_MODEL_ID => {}
                m if m == ensemble_model => {
                    ensemble = Some(value);
                    hub_scores.push(value);
                }
                _ => hub_scores.push(value),
            }
        }
        let Some(market) = market else {
            return Ok(None);
        };
        if hub_scores.is_empty() {
            return Ok(None);
        }
        let mut markers = vec![Marker {
            label: "market".into(),
            x: market,
            color: "#d62728",
        }];
        if let Some(e) = ensemble {
            markers.push(Marker {
                label: "ensemble".into(),
                x: e,
                color: "#1f77b4",
            });
        }
        panels.push(Panel {
            title: format!("hub {metric} distribution"),
            x_label: format!("mean {metric}"),
            y_label: "models".into(),
            lines: Vec::new(),
            bars: Some(histogram_bars(&hub_scores, 8)),
            markers,
        });
    }
    Ok(Some(figures::render(&panels)))
}

/// Builds `report.html`. Evaluate outputs are required; combine and diagnose
/// sections degrade to placeholders when absent.
pub fn cmd_report(config: &RunConfig) -> Result<PathBuf, PipelineError> {
    let out = &config.output_dir;
    let required = ["scores.csv", "aggregate.csv", "run_metadata.json"];
    let missing: Vec<String> = required
        .iter()
        .filter(|name| !out.join(name).exists())
        .map(|name| name.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::MissingArtifacts(missing));
    }

    let aggregate_path = out.join("aggregate.csv");
    let aggregate = read_csv(&aggregate_path)?;
    let scores = read_csv(&out.join("scores.csv"))?;
    let metadata = std::fs::read_to_string(out.join("run_metadata.json"))?;

    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n");
    html.push_str("<title>marketcast report</title>\n<style>\n");
    html.push_str(
        "body{font-family:sans-serif;max-width:1200px;margin:2em auto;padding:0 1em}\n\
         table{border-collapse:collapse;margin:1em 0}\n\
         th,td{border:1px solid #ccc;padding:4px 10px;font-size:13px;text-align:right}\n\
         th{background:#f0f0f0}\ntd:first-child,th:first-child{text-align:left}\n\
         .placeholder{color:#888;font-style:italic}\npre{background:#f7f7f7;padding:1em;overflow-x:auto}\n",
    );
    html.push_str("</style></head><body>\n<h1>marketcast report</h1>\n");

    html.push_str("<h2>Scores</h2>\n");
    if let Some(svg) = score_histogram(&aggregate, &aggregate_path, &config.ensemble_model)? {
        html.push_str(&svg);
    }
    html.push_str("<h3>Aggregate (mean over events)</h3>\n");
    html.push_str(&html_table(&aggregate));
    let percentiles_path = out.join("percentiles.csv");
    if percentiles_path.exists() {
        let percentiles = read_csv(&percentiles_path)?;
        if !percentiles.rows.is_empty() {
            html.push_str("<h3>Market percentile within the hub</h3>\n");
            html.push_str(&html_table(&percentiles));
        }
    }
    html.push_str("<h3>Per-event scores</h3>\n");
    html.push_str(&html_table(&scores));

    html.push_str("<h2>Combination weight</h2>\n");
    let alpha_svg = out.join("alpha_curves.svg");
    if alpha_svg.exists() {
        html.push_str(&std::fs::read_to_string(&alpha_svg)?);
        let summary_path = out.join("combine_summary.json");
        if summary_path.exists() {
            html.push_str("<pre>");
            html.push_str(&std::fs::read_to_string(&summary_path)?);
            html.push_str("</pre>\n");
        }
    } else {
        html.push_str(&placeholder("Combination curves", "combine"));
    }

    html.push_str("<h2>Diagnostics</h2>\n");
    let impossible_svg = out.join("impossible_mass.svg");
    if impossible_svg.exists() {
        html.push_str(&std::fs::read_to_string(&impossible_svg)?);
        for name in ["monotonicity.csv", "volume_markets.csv", "volume_weekly.csv"] {
            let path = out.join(name);
            if path.exists() {
                write!(html, "<h3>{name}</h3>\n").unwrap();
                html.push_str(&html_table(&read_csv(&path)?));
            }
        }
    } else {
        html.push_str(&placeholder("Diagnostics", "diagnose"));
    }

    html.push_str("<h2>Run metadata</h2>\n<pre>");
    html.push_str(&metadata);
    html.push_str("</pre>\n</body></html>\n");

    let path = out.join("report.html");
    write_atomic(&path, &html)?;
    Ok(path)
}
