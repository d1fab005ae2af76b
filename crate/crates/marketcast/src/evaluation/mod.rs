//! Proper scoring rules over bins and per-event aggregation.
//!
//! Three rules are supported: the multiclass Brier score, the log score
//! (natural log, clamped so a realized bin priced at zero stays finite), and
//! a binned CRPS built as the width-weighted squared difference between the
//! forecast and outcome CDFs, with the open top bin contributing zero
//! identically. Lower is better for all three.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bins::PredictiveDistribution;

mod combine;
mod diagnostics;

pub use combine::{optimize_alpha, optimize_alpha_weighted, AlphaEvent, CombinationCurve};
pub use diagnostics::{impossible_mass, volume_summary, MarketVolume, VolumeSummary};

/// Probability floor inside the log score; a confidently wrong market would
/// otherwise produce an infinite score and destroy mean aggregation.
pub const LOG_CLAMP_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("bin index {index} out of range for {bins} bins")]
    IndexOutOfRange { index: usize, bins: usize },
    #[error("no snapshots to score")]
    EmptySnapshots,
    #[error("no hub means to rank against")]
    EmptyHub,
    #[error("no events to combine")]
    EmptyEvents,
    #[error("grid step {step} does not divide 1 evenly")]
    BadGridStep { step: f64 },
    #[error("event {index}: forecasts do not share a partition")]
    MismatchedPartitions { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Brier,
    LogScore,
    Crps,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Brier, Metric::LogScore, Metric::Crps];

    pub fn score(self, dist: &PredictiveDistribution, outcome_bin: usize) -> Result<f64, EvalError> {
        match self {
            Metric::Brier => brier(dist, outcome_bin),
            Metric::LogScore => log_score(dist, outcome_bin),
            Metric::Crps => crps_binned(dist, outcome_bin),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Brier => write!(f, "brier"),
            Metric::LogScore => write!(f, "log_score"),
            Metric::Crps => write!(f, "crps"),
        }
    }
}

fn check_index(dist: &PredictiveDistribution, outcome_bin: usize) -> Result<(), EvalError> {
    if outcome_bin >= dist.len() {
        return Err(EvalError::IndexOutOfRange {
            index: outcome_bin,
            bins: dist.len(),
        });
    }
    Ok(())
}

/// Multiclass Brier score: squared error against the outcome indicator.
/// Range [0, 2].
pub fn brier(dist: &PredictiveDistribution, outcome_bin: usize) -> Result<f64, EvalError> {
    check_index(dist, outcome_bin)?;
    Ok(dist
        .probs()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let indicator = if i == outcome_bin { 1.0 } else { 0.0 };
            (p - indicator) * (p - indicator)
        })
        .sum())
}

/// Negative natural log of the probability on the realized bin, clamped at
/// [`LOG_CLAMP_EPSILON`].
pub fn log_score(dist: &PredictiveDistribution, outcome_bin: usize) -> Result<f64, EvalError> {
    check_index(dist, outcome_bin)?;
    Ok(-dist.probs()[outcome_bin].max(LOG_CLAMP_EPSILON).ln())
}

/// Binned CRPS: `sum_i (F_i - H_i)^2 * width_i` over bounded bins, where F
/// is the forecast CDF and H the outcome step CDF. The open top bin has
/// F = H = 1, so it contributes zero regardless of any notional width; the
/// score carries the units of the target quantity.
pub fn crps_binned(dist: &PredictiveDistribution, outcome_bin: usize) -> Result<f64, EvalError> {
    check_index(dist, outcome_bin)?;
    let cdf = dist.cdf();
    let partition = dist.partition();
    let mut total = 0.0;
    for i in 0..dist.len() - 1 {
        let step = if outcome_bin <= i { 1.0 } else { 0.0 };
        let diff = cdf[i] - step;
        total += diff * diff * partition.width(i).expect("bounded bin");
    }
    Ok(total)
}

/// Neumaier-compensated mean, so aggregation order never shows up in the
/// results beyond 1e-12 even across parallel event processing.
pub fn mean_compensated(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    (sum + compensation) / values.len() as f64
}

/// Per-event, per-model mean scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub event_id: String,
    pub model_id: String,
    pub brier: f64,
    pub log_score: f64,
    pub crps: f64,
    pub n_snapshots: usize,
}

/// Scores every snapshot against the fixed outcome and averages, giving one
/// performance measure per event.
pub fn score_event(
    event_id: &str,
    model_id: &str,
    snapshots: &[crate::contracts::MarketSnapshot],
    outcome_bin: usize,
) -> Result<ScoreRecord, EvalError> {
    if snapshots.is_empty() {
        return Err(EvalError::EmptySnapshots);
    }
    let mut briers = Vec::with_capacity(snapshots.len());
    let mut logs = Vec::with_capacity(snapshots.len());
    let mut crpss = Vec::with_capacity(snapshots.len());
    for snapshot in snapshots {
        briers.push(brier(&snapshot.dist, outcome_bin)?);
        logs.push(log_score(&snapshot.dist, outcome_bin)?);
        crpss.push(crps_binned(&snapshot.dist, outcome_bin)?);
    }
    Ok(ScoreRecord {
        event_id: event_id.to_string(),
        model_id: model_id.to_string(),
        brier: mean_compensated(&briers),
        log_score: mean_compensated(&logs),
        crps: mean_compensated(&crpss),
        n_snapshots: snapshots.len(),
    })
}

/// How ties count when ranking a candidate against hub models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PercentileConvention {
    /// Percent of hub models the candidate strictly beats.
    Strict,
    /// Percent of hub models the candidate beats or ties.
    Weak,
}

/// Percentile of the candidate within the hub score distribution; lower
/// scores are better, so beating a model means having the smaller mean.
pub fn percentile_rank(
    candidate_mean: f64,
    hub_means: &[f64],
    convention: PercentileConvention,
) -> Result<f64, EvalError> {
    if hub_means.is_empty() {
        return Err(EvalError::EmptyHub);
    }
    let beaten = hub_means
        .iter()
        .filter(|&&m| match convention {
            PercentileConvention::Strict => m > candidate_mean,
            PercentileConvention::Weak => m >= candidate_mean,
        })
        .count();
    Ok(100.0 * beaten as f64 / hub_means.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bins::BinPartition;
    use crate::contracts::MarketSnapshot;
    use chrono::DateTime;

    fn dist(edges: &[f64], probs: &[f64]) -> PredictiveDistribution {
        PredictiveDistribution::new(BinPartition::new(edges.to_vec()).unwrap(), probs.to_vec())
            .unwrap()
    }

    #[test]
    fn brier_hand_cases() {
        let d = dist(&[0.0, 1.0, 2.0], &[0.2, 0.5, 0.3]);
        assert!((brier(&d, 1).unwrap() - 0.38).abs() < 1e-12);

        let point = dist(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]);
        assert_eq!(brier(&point, 1).unwrap(), 0.0);
        assert_eq!(brier(&point, 0).unwrap(), 2.0);
        assert!(matches!(
            brier(&point, 3),
            Err(EvalError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn log_score_clamps_zero_probability() {
        let d = dist(&[0.0, 1.0], &[0.5, 0.5]);
        assert!((log_score(&d, 0).unwrap() - 2.0f64.ln()).abs() < 1e-12);

        let certain = dist(&[0.0, 1.0], &[1.0, 0.0]);
        assert_eq!(log_score(&certain, 0).unwrap(), 0.0);
        let clamped = log_score(&certain, 1).unwrap();
        assert!((clamped - (-LOG_CLAMP_EPSILON.ln())).abs() < 1e-9);
        assert!((clamped - 23.025_850_929_94).abs() < 1e-6);
    }

    #[test]
    fn crps_hand_cases() {
        // unit widths; forecast mass two bins above/below the outcome
        let high = dist(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.0, 1.0, 0.0]);
        assert!((crps_binned(&high, 0).unwrap() - 2.0).abs() < 1e-12);

        let low = dist(&[0.0, 1.0, 2.0, 3.0], &[1.0, 0.0, 0.0, 0.0]);
        assert!((crps_binned(&low, 2).unwrap() - 2.0).abs() < 1e-12);

        let point = dist(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(crps_binned(&point, 1).unwrap(), 0.0);
    }

    #[test]
    fn crps_ignores_the_open_top_bin() {
        // all mass and the outcome in the top bin: no bounded-bin disagreement
        let top = dist(&[0.0, 1.0], &[0.0, 1.0]);
        assert_eq!(crps_binned(&top, 1).unwrap(), 0.0);
    }

    fn snapshot(probs: &[f64]) -> MarketSnapshot {
        MarketSnapshot {
            time: DateTime::from_timestamp(0, 0).unwrap(),
            dist: dist(&[0.0, 1.0, 2.0], probs),
            raw_sum: 1.0,
            monotonicity_violation: 0.0,
        }
    }

    #[test]
    fn score_event_averages_snapshots() {
        let snaps = vec![snapshot(&[0.8, 0.1, 0.1]), snapshot(&[0.4, 0.3, 0.3])];
        let record = score_event("e1", "market", &snaps, 0).unwrap();
        let brier_a = brier(&snaps[0].dist, 0).unwrap();
        let brier_b = brier(&snaps[1].dist, 0).unwrap();
        assert!((record.brier - (brier_a + brier_b) / 2.0).abs() < 1e-12);
        assert_eq!(record.n_snapshots, 2);

        let single = score_event("e1", "market", &snaps[..1], 0).unwrap();
        assert!((single.brier - brier_a).abs() < 1e-15);

        assert!(matches!(
            score_event("e1", "market", &[], 0),
            Err(EvalError::EmptySnapshots)
        ));
    }

    #[test]
    fn score_event_is_permutation_invariant() {
        let snaps: Vec<MarketSnapshot> = (0..50)
            .map(|i| {
                let a = 0.1 + 0.8 * ((i as f64 * 0.37).sin().abs());
                snapshot(&[a, (1.0 - a) / 2.0, (1.0 - a) / 2.0])
            })
            .collect();
        let forward = score_event("e", "m", &snaps, 1).unwrap();
        let mut reversed = snaps;
        reversed.reverse();
        let backward = score_event("e", "m", &reversed, 1).unwrap();
        assert!((forward.brier - backward.brier).abs() < 1e-12);
        assert!((forward.log_score - backward.log_score).abs() < 1e-12);
        assert!((forward.crps - backward.crps).abs() < 1e-12);
    }

    #[test]
    fn percentile_counts_models_beaten() {
        let hub = [0.2, 0.25, 0.35, 0.4];
        assert_eq!(
            percentile_rank(0.30, &hub, PercentileConvention::Strict).unwrap(),
            50.0
        );
        assert_eq!(
            percentile_rank(0.5, &hub, PercentileConvention::Strict).unwrap(),
            0.0
        );
        assert_eq!(
            percentile_rank(0.1, &hub, PercentileConvention::Strict).unwrap(),
            100.0
        );
        // ties: strict does not credit them, weak does
        assert_eq!(
            percentile_rank(0.25, &hub, PercentileConvention::Strict).unwrap(),
            50.0
        );
        assert_eq!(
            percentile_rank(0.25, &hub, PercentileConvention::Weak).unwrap(),
            75.0
        );
        assert!(matches!(
            percentile_rank(0.3, &[], PercentileConvention::Strict),
            Err(EvalError::EmptyHub)
        ));
    }
}
