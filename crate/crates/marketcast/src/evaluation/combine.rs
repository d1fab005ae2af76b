//! Convex-combination weight search: does forecast A carry information
//! beyond forecast B? Scan q = alpha*A + (1-alpha)*B over an alpha grid and
//! find the weight minimizing each scoring rule.

use serde::Serialize;

use super::{mean_compensated, EvalError, Metric};
use crate::bins::PredictiveDistribution;

/// One scored event: two forecasts over a shared partition plus the realized
/// bin. The weight lets callers average per-snapshot pairs without letting
/// long-lived markets dominate the event mean.
#[derive(Debug, Clone)]
pub struct AlphaEvent {
    pub p_a: PredictiveDistribution,
    pub p_b: PredictiveDistribution,
    pub y: usize,
    pub weight: f64,
}

impl AlphaEvent {
    pub fn new(p_a: PredictiveDistribution, p_b: PredictiveDistribution, y: usize) -> Self {
        Self {
            p_a,
            p_b,
            y,
            weight: 1.0,
        }
    }
}

/// Mean score along the alpha grid and its argmin.
#[derive(Debug, Clone, Serialize)]
pub struct CombinationCurve {
    pub metric: Metric,
    pub alphas: Vec<f64>,
    pub scores: Vec<f64>,
    pub alpha_star: f64,
}

/// Uniform-weight search, one entry per event.
pub fn optimize_alpha(
    events: &[AlphaEvent],
    metric: Metric,
    grid_step: f64,
) -> Result<CombinationCurve, EvalError> {
    optimize_alpha_weighted(events, metric, grid_step, false)
}

/// Weight-aware variant: scores are weighted means with each event's weight.
/// Ties in the minimum break toward larger alpha, i.e. toward p_a; equal
/// forecasts therefore report alpha_star = 1 rather than crediting p_b.
pub fn optimize_alpha_weighted(
    events: &[AlphaEvent],
    metric: Metric,
    grid_step: f64,
    use_weights: bool,
) -> Result<CombinationCurve, EvalError> {
    if events.is_empty() {
        return Err(EvalError::EmptyEvents);
    }
    if !(grid_step > 0.0) || grid_step > 1.0 {
        return Err(EvalError::BadGridStep { step: grid_step });
    }
    let steps = (1.0 / grid_step).round();
    if ((steps * grid_step) - 1.0).abs() > 1e-9 {
        return Err(EvalError::BadGridStep { step: grid_step });
    }
    let steps = steps as usize;

    for (index, event) in events.iter().enumerate() {
        if event.p_a.partition() != event.p_b.partition() {
            return Err(EvalError::MismatchedPartitions { index });
        }
        if event.y >= event.p_a.len() {
            return Err(EvalError::IndexOutOfRange {
                index: event.y,
                bins: event.p_a.len(),
            });
        }
    }

    let total_weight: f64 = if use_weights {
        events.iter().map(|e| e.weight).sum()
    } else {
        events.len() as f64
    };

    let mut alphas = Vec::with_capacity(steps + 1);
    let mut scores = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let alpha = if i == steps { 1.0 } else { i as f64 * grid_step };
        let mut contributions = Vec::with_capacity(events.len());
        for event in events {
            let mixed: Vec<f64> = event
                .p_a
                .probs()
                .iter()
                .zip(event.p_b.probs())
                .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
                .collect();
            let dist = PredictiveDistribution::new(event.p_a.partition().clone(), mixed)
                .expect("convex combination of distributions is a distribution");
            let score = metric.score(&dist, event.y)?;
            let w = if use_weights { event.weight } else { 1.0 };
            contributions.push(score * w);
        }
        let mean = mean_compensated(&contributions) * contributions.len() as f64 / total_weight;
        alphas.push(alpha);
        scores.push(mean);
    }

    // ascending scan; <= tolerance moves ties to the larger alpha
    let mut best_index = 0;
    let mut min_seen = scores[0];
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s <= min_seen + 1e-12 {
            best_index = i;
            min_seen = min_seen.min(s);
        }
    }

    Ok(CombinationCurve {
        metric,
        alphas: alphas.clone(),
        scores,
        alpha_star: alphas[best_index],
    })
}
