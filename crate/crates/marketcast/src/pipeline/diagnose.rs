//! The `diagnose` command: impossible-mass time series against the vintage
//! floor, traded-volume totals, and threshold monotonicity violations.

use serde::Serialize;

use crate::evaluation::{impossible_mass, volume_summary, VolumeSummary};

use super::evaluate::{csv_string, write_atomic};
use super::figures::{self, Panel};
use super::metadata::RunMetadata;
use super::prep::prepare;
use super::{PipelineError, RunConfig};

#[derive(Debug, Clone, Serialize)]
pub struct ImpossibleMassRow {
    pub market_id: String,
    pub time: String,
    pub known_floor: f64,
    pub impossible_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityRow {
    pub market_id: String,
    pub n_snapshots: usize,
    pub n_violating: usize,
    pub mean_violation: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
struct VolumeMarketRow {
    market_id: String,
    total_usd: String,
}

#[derive(Debug, Clone, Serialize)]
struct VolumeWeekRow {
    iso_year: i32,
    iso_week: u32,
    traded_usd: f64,
}

#[derive(Debug)]
pub struct DiagnoseOutputs {
    pub impossible: Vec<ImpossibleMassRow>,
    pub monotonicity: Vec<MonotonicityRow>,
    pub volume: VolumeSummary,
    pub skipped_no_floor: usize,
    pub warnings: Vec<String>,
}

impl DiagnoseOutputs {
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        let positive = self.impossible.iter().filter(|r| r.impossible_mass > 0.0).count();
        lines.push(format!(
            "impossible mass: {} snapshot observations, {} strictly positive, {} without a vintage floor",
            self.impossible.len(),
            positive,
            self.skipped_no_floor
        ));
        if self.volume.markets_missing_volume == self.volume.markets.len() {
            lines.push("volume: missing for every market".to_string());
        } else {
            lines.push(format!(
                "volume: ${:.0} total across {} markets ({} missing volume data)",
                self.volume.total_usd,
                self.volume.markets.len() - self.volume.markets_missing_volume,
                self.volume.markets_missing_volume
            ));
        }
        let violating: usize = self.monotonicity.iter().map(|r| r.n_violating).sum();
        lines.push(format!(
            "monotonicity: {violating} snapshots carried clamped threshold mass"
        ));
        for warning in &self.warnings {
            lines.push(format!("warning: {warning}"));
        }
        lines
    }
}

/// Writes `impossible_mass.csv`, `monotonicity.csv`, `volume_markets.csv`,
/// `volume_weekly.csv`, and `impossible_mass.svg`.
pub fn cmd_diagnose(config: &RunConfig) -> Result<DiagnoseOutputs, PipelineError> {
    let prepared = prepare(config)?;

    let mut impossible = Vec::new();
    let mut skipped_no_floor = 0usize;
    let mut monotonicity = Vec::new();
    for event in &prepared.events {
        let mut violations: Vec<f64> = Vec::with_capacity(event.snapshots.len());
        for snapshot in &event.snapshots {
            violations.push(snapshot.monotonicity_violation);
            match prepared.series.value_as_of(snapshot.time) {
                Some(floor) => impossible.push(ImpossibleMassRow {
                    market_id: event.market_id.clone(),
                    time: snapshot.time.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                    known_floor: floor,
                    impossible_mass: impossible_mass(&snapshot.dist, floor),
                }),
                None => skipped_no_floor += 1,
            }
        }
        let n_violating = violations.iter().filter(|&&v| v > 0.0).count();
        monotonicity.push(MonotonicityRow {
            market_id: event.market_id.clone(),
            n_snapshots: event.snapshots.len(),
            n_violating,
            mean_violation: violations.iter().sum::<f64>() / violations.len() as f64,
            max_violation: violations.iter().copied().fold(0.0, f64::max),
        });
    }

    let volume = volume_summary(&prepared.records);

    // one line per market, snapshot index on the x axis
    let lines: Vec<figures::Line> = prepared
        .events
        .iter()
        .map(|event| {
            let points: Vec<(f64, f64)> = impossible
                .iter()
                .filter(|row| row.market_id == event.market_id)
                .enumerate()
                .map(|(i, row)| (i as f64, row.impossible_mass))
                .collect();
            figures::Line {
                name: event.market_id.clone(),
                points,
            }
        })
        .filter(|line| !line.points.is_empty())
        .collect();
    let panel = Panel {
        title: "probability mass on impossible bins".into(),
        x_label: "snapshot index".into(),
        y_label: "impossible mass".into(),
        lines,
        bars: None,
        markers: Vec::new(),
    };

    let volume_market_rows: Vec<VolumeMarketRow> = volume
        .markets
        .iter()
        .map(|m| VolumeMarketRow {
            market_id: m.market_id.clone(),
            total_usd: m.total_usd.map_or_else(|| "missing".into(), |v| v.to_string()),
        })
        .collect();
    let volume_week_rows: Vec<VolumeWeekRow> = volume
        .weekly_usd
        .iter()
        .map(|(&(iso_year, iso_week), &traded_usd)| VolumeWeekRow {
            iso_year,
            iso_week,
            traded_usd,
        })
        .collect();

    let out = &config.output_dir;
    write_atomic(&out.join("impossible_mass.csv"), &csv_string(&impossible)?)?;
    write_atomic(&out.join("monotonicity.csv"), &csv_string(&monotonicity)?)?;
    write_atomic(&out.join("volume_markets.csv"), &csv_string(&volume_market_rows)?)?;
    write_atomic(&out.join("volume_weekly.csv"), &csv_string(&volume_week_rows)?)?;
    write_atomic(
        &out.join("impossible_mass.svg"),
        &figures::render(std::slice::from_ref(&panel)),
    )?;
    write_atomic(
        &out.join("run_metadata.json"),
        &RunMetadata::from_config(config).to_json(),
    )?;

    Ok(DiagnoseOutputs {
        impossible,
        monotonicity,
        volume,
        skipped_no_floor,
        warnings: prepared.warnings,
    })
}
