//! Baseline forecasts in bin space: hub-style quantile submissions mapped
//! through a piecewise CDF, and an auto-ARIMA model fit to surveillance
//! history. Both discretize onto the same market partition so every model is
//! scored on identical ground.

use chrono::{DateTime, Utc};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::bins::{BinError, BinPartition, PredictiveDistribution};

mod arima;
mod hub;

pub use arima::{arima_forecast, fit_auto_arima, ArimaGridConfig, ArimaModel, ArimaOrder, ForecastPoint};
pub use hub::{parse_hub_csv, HubForecast};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("series too short: {len} observations after differencing, need {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("no ARIMA grid point converged")]
    FitFailure,
    #[error("invalid quantile forecast: {0}")]
    InvalidQuantiles(String),
    #[error("{file}:{line}: {detail}")]
    Schema {
        file: String,
        line: u64,
        detail: String,
    },
    #[error(transparent)]
    Bin(#[from] BinError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A forecast as submitted to a hub: (probability level, value) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileForecast {
    levels: Vec<f64>,
    values: Vec<f64>,
    pub reference_time: DateTime<Utc>,
    pub horizon_weeks: u32,
}

impl QuantileForecast {
    pub fn new(
        levels: Vec<f64>,
        values: Vec<f64>,
        reference_time: DateTime<Utc>,
        horizon_weeks: u32,
    ) -> Result<Self, BaselineError> {
        if levels.len() != values.len() || levels.len() < 2 {
            return Err(BaselineError::InvalidQuantiles(format!(
                "need >= 2 matching level/value pairs, got {} levels and {} values",
                levels.len(),
                values.len()
            )));
        }
        for w in levels.windows(2) {
            if !(w[1] > w[0]) {
                return Err(BaselineError::InvalidQuantiles(format!(
                    "levels not strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if levels[0] <= 0.0 || *levels.last().unwrap() >= 1.0 {
            return Err(BaselineError::InvalidQuantiles(
                "levels must lie strictly inside (0, 1)".into(),
            ));
        }
        for w in values.windows(2) {
            if w[1] < w[0] {
                return Err(BaselineError::InvalidQuantiles(format!(
                    "values decrease: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(BaselineError::InvalidQuantiles("non-finite value".into()));
        }
        Ok(Self {
            levels,
            values,
            reference_time,
            horizon_weeks,
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Shifts an incident-quantity forecast onto the cumulative scale:
/// `value' = last_cumulative + kappa * value`. Adding a constant and scaling
/// by a positive factor commute with quantiles exactly, so levels are
/// untouched.
pub fn incident_to_cumulative(
    incident: &QuantileForecast,
    last_cumulative: f64,
    kappa: f64,
) -> QuantileForecast {
    assert!(kappa > 0.0, "kappa must be positive");
    assert!(last_cumulative >= 0.0, "cumulative history cannot be negative");
    QuantileForecast {
        levels: incident.levels.clone(),
        values: incident
            .values
            .iter()
            .map(|v| last_cumulative + kappa * v)
            .collect(),
        reference_time: incident.reference_time,
        horizon_weeks: incident.horizon_weeks,
    }
}

// The forecast's CDF decomposes into point masses (the two tails, plus jumps
// where consecutive quantile values tie) and linear segments. Each element
// hands its mass to bins by interval overlap, so total mass is conserved
// element by element.
enum MassElement {
    Atom { x: f64, mass: f64 },
    Segment { lo: f64, hi: f64, mass: f64 },
}

fn cdf_elements(qf: &QuantileForecast) -> Vec<MassElement> {
    let levels = &qf.levels;
    let values = &qf.values;
    let last = levels.len() - 1;
    let mut elements = Vec::with_capacity(levels.len() + 1);
    elements.push(MassElement::Atom {
        x: values[0],
        mass: levels[0],
    });
    for j in 0..last {
        let mass = levels[j + 1] - levels[j];
        if values[j + 1] > values[j] {
            elements.push(MassElement::Segment {
                lo: values[j],
                hi: values[j + 1],
                mass,
            });
        } else {
            elements.push(MassElement::Atom {
                x: values[j],
                mass,
            });
        }
    }
    elements.push(MassElement::Atom {
        x: values[last],
        mass: 1.0 - levels[last],
    });
    elements
}

/// Discretizes a quantile forecast onto a bin partition via the piecewise
/// CDF through its (value, level) points. Tail mass outside the extreme
/// quantiles goes wholly to the bins containing those quantiles; mass
/// sitting exactly on a bin edge goes to the higher bin; mass below the
/// partition floor folds into bin 0 (a cumulative target cannot fall below
/// it).
pub fn quantiles_to_bins(
    qf: &QuantileForecast,
    partition: &BinPartition,
) -> Result<PredictiveDistribution, BaselineError> {
    let k = partition.len();
    let edges = partition.edges();
    let mut masses = vec![0.0; k];

    let place_atom = |masses: &mut [f64], x: f64, mass: f64| {
        if mass <= 0.0 {
            return;
        }
        let bin = if x < edges[0] {
            0
        } else {
            partition.bin_of(x).expect("x at or above floor")
        };
        masses[bin] += mass;
    };

    for element in cdf_elements(qf) {
        match element {
            MassElement::Atom { x, mass } => place_atom(&mut masses, x, mass),
            MassElement::Segment { lo, hi, mass } => {
                // bin 0 reaches down to -inf (floor fold), top bin up to +inf
                let len = hi - lo;
                let mut fractions = vec![0.0; k];
                for i in 0..k {
                    let bin_lo = if i == 0 { f64::NEG_INFINITY } else { edges[i] };
                    let bin_hi = if i + 1 < k { edges[i + 1] } else { f64::INFINITY };
                    let overlap = (hi.min(bin_hi) - lo.max(bin_lo)).max(0.0);
                    fractions[i] = overlap / len;
                }
                let total: f64 = fractions.iter().sum();
                for i in 0..k {
                    masses[i] += mass * fractions[i] / total;
                }
            }
        }
    }

    Ok(PredictiveDistribution::new(partition.clone(), masses)?)
}

/// Discretizes a Gaussian forecast onto the partition. Mass below the floor
/// folds into bin 0.
pub fn gaussian_to_bins(mean: f64, variance: f64, partition: &BinPartition) -> PredictiveDistribution {
    assert!(variance > 0.0, "variance must be positive");
    let normal = Normal::new(mean, variance.sqrt()).expect("finite mean, positive sigma");
    let edges = partition.edges();
    let k = partition.len();
    let mut masses = vec![0.0; k];
    if k == 1 {
        masses[0] = 1.0;
    } else {
        let cdf_at: Vec<f64> = edges[1..].iter().map(|&e| normal.cdf(e)).collect();
        masses[0] = cdf_at[0];
        for i in 1..k - 1 {
            masses[i] = (cdf_at[i] - cdf_at[i - 1]).max(0.0);
        }
        masses[k - 1] = 1.0 - cdf_at[k - 2];
    }
    PredictiveDistribution::new(partition.clone(), masses).expect("gaussian masses are a distribution")
}
