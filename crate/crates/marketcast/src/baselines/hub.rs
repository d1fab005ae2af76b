//! Hub-style long-format forecast CSV: one row per (model, reference date,
//! horizon, quantile level). Only `output_type = "quantile"` rows are
//! consumed; everything else is ignored.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;

use super::{BaselineError, QuantileForecast};

/// One model's quantile forecast for one reference date and horizon.
#[derive(Debug, Clone)]
pub struct HubForecast {
    pub model_id: String,
    pub reference_date: NaiveDate,
    pub horizon_weeks: u32,
    pub forecast: QuantileForecast,
}

impl HubForecast {
    /// Date the forecast is about: reference date plus the horizon in weeks.
    pub fn target_date(&self) -> NaiveDate {
        self.reference_date + chrono::Duration::weeks(i64::from(self.horizon_weeks))
    }
}

/// Parses hub rows for one target string, grouping into per-model forecasts.
/// Columns: `reference_date, target, horizon, output_type, output_type_id,
/// value, model_id`.
pub fn parse_hub_csv(path: &Path, target: &str) -> Result<Vec<HubForecast>, BaselineError> {
    let shown = path.display().to_string();
    let schema_err = |line: u64, detail: String| BaselineError::Schema {
        file: shown.clone(),
        line,
        detail,
    };

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| schema_err(0, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| schema_err(1, e.to_string()))?
        .clone();
    let col = |name: &str| -> Result<usize, BaselineError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema_err(1, format!("missing column {name:?}")))
    };
    let c_ref = col("reference_date")?;
    let c_target = col("target")?;
    let c_horizon = col("horizon")?;
    let c_type = col("output_type")?;
    let c_level = col("output_type_id")?;
    let c_value = col("value")?;
    let c_model = col("model_id")?;

    // (model, reference, horizon) -> (level, value) rows
    let mut groups: BTreeMap<(String, NaiveDate, u32), Vec<(f64, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| schema_err(0, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |idx: usize| -> Result<&str, BaselineError> {
            record
                .get(idx)
                .ok_or_else(|| schema_err(line, format!("missing field {idx}")))
        };
        if get(c_type)? != "quantile" || get(c_target)? != target {
            continue;
        }
        let reference_date = NaiveDate::parse_from_str(get(c_ref)?, "%Y-%m-%d")
            .map_err(|e| schema_err(line, format!("bad reference_date: {e}")))?;
        let horizon: u32 = get(c_horizon)?
            .parse()
            .map_err(|e| schema_err(line, format!("bad horizon: {e}")))?;
        let level: f64 = get(c_level)?
            .parse()
            .map_err(|e| schema_err(line, format!("bad output_type_id: {e}")))?;
        let value: f64 = get(c_value)?
            .parse()
            .map_err(|e| schema_err(line, format!("bad value: {e}")))?;
        groups
            .entry((get(c_model)?.to_string(), reference_date, horizon))
            .or_default()
            .push((level, value));
    }

    let mut forecasts = Vec::with_capacity(groups.len());
    for ((model_id, reference_date, horizon_weeks), mut rows) in groups {
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite levels"));
        let (levels, values): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
        let reference_time = reference_date
            .and_hms_opt(12, 0, 0)
            .expect("valid time")
            .and_utc();
        let forecast = QuantileForecast::new(levels, values, reference_time, horizon_weeks)
            .map_err(|e| {
                BaselineError::InvalidQuantiles(format!(
                    "{model_id} @ {reference_date} h{horizon_weeks}: {e}"
                ))
            })?;
        forecasts.push(HubForecast {
            model_id,
            reference_date,
            horizon_weeks,
            forecast,
        });
    }
    Ok(forecasts)
}
