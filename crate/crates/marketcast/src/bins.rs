//! Bin partitions and discrete predictive distributions.
//!
//! Every forecast in this crate — market-implied, hub-submitted, or
//! statistical — is expressed as a probability vector over an ordered set of
//! disjoint value intervals. The final interval is always open-ended above,
//! matching how markets phrase their top outcome ("N or more").

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Raw contract prices summing below this are treated as a dead market
/// snapshot rather than a forecast.
pub const NORMALIZATION_FLOOR: f64 = 0.05;

/// Errors from partition construction, outcome mapping, and normalization.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum BinError {
    #[error("edge list is empty")]
    EmptyEdges,
    #[error("edges not strictly increasing at index {index}: {prev} then {next}")]
    NonMonotonicEdges { index: usize, prev: f64, next: f64 },
    #[error("value {value} lies below the partition floor {floor}")]
    BelowPartition { value: f64, floor: f64 },
    #[error("weight at index {index} is negative: {weight}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("total weight {sum} is below the degenerate-mass floor {floor}")]
    DegenerateMass { sum: f64, floor: f64 },
    #[error("expected {expected} probabilities for the partition, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("probability at index {index} outside [0, 1]: {value}")]
    ProbOutOfRange { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("bin index {index} out of range for {bins} bins")]
    IndexOutOfRange { index: usize, bins: usize },
}

/// An ordered set of disjoint, lower-closed value intervals covering
/// `[edges[0], +inf)`. With K edges there are K bins: bin `i < K-1` is
/// `[edges[i], edges[i+1])` and bin `K-1` is `[edges[K-1], +inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinPartition {
    edges: Vec<f64>,
}

impl BinPartition {
    /// Builds a partition from strictly increasing, finite edges.
    pub fn new(edges: Vec<f64>) -> Result<Self, BinError> {
        if edges.is_empty() {
            return Err(BinError::EmptyEdges);
        }
        for (i, pair) in edges.windows(2).enumerate() {
            // `!(b > a)` also rejects NaN edges
            if !(pair[1] > pair[0]) {
                return Err(BinError::NonMonotonicEdges {
                    index: i,
                    prev: pair[0],
                    next: pair[1],
                });
            }
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(BinError::NonMonotonicEdges {
                index: 0,
                prev: edges[0],
                next: *edges.last().unwrap(),
            });
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Number of bins (equal to the number of edges; the last bin is open).
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a valid partition always has at least one bin
    }

    /// Lower edge of bin `i`.
    pub fn lower(&self, i: usize) -> Option<f64> {
        self.edges.get(i).copied()
    }

    /// Upper edge of bin `i`; `None` for the open top bin.
    pub fn upper(&self, i: usize) -> Option<f64> {
        self.edges.get(i + 1).copied()
    }

    /// Width of bin `i`; `None` for the open top bin.
    pub fn width(&self, i: usize) -> Option<f64> {
        self.upper(i).map(|u| u - self.edges[i])
    }

    /// Maps an outcome value to its bin index. A value exactly on a shared
    /// boundary belongs to the bin whose lower edge equals it (the higher
    /// bin), the same rule the markets use at resolution.
    pub fn bin_of(&self, value: f64) -> Result<usize, BinError> {
        if !(value >= self.edges[0]) {
            return Err(BinError::BelowPartition {
                value,
                floor: self.edges[0],
            });
        }
        // last index with edges[i] <= value
        Ok(self.edges.partition_point(|&e| e <= value) - 1)
    }
}

/// A probability vector over a [`BinPartition`]. Probabilities are
/// non-negative and rescaled at construction so they sum to 1 exactly
/// (within floating-point rounding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDistribution {
    partition: BinPartition,
    probs: Vec<f64>,
}

impl PredictiveDistribution {
    /// Validates and stores a probability vector. Inputs may be off from a
    /// unit sum by up to 1e-9 (accumulated rounding from upstream
    /// arithmetic); anything worse is rejected.
    pub fn new(partition: BinPartition, probs: Vec<f64>) -> Result<Self, BinError> {
        if probs.len() != partition.len() {
            return Err(BinError::LengthMismatch {
                expected: partition.len(),
                actual: probs.len(),
            });
        }
        const SLOP: f64 = 1e-9;
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < -SLOP || p > 1.0 + SLOP {
                return Err(BinError::ProbOutOfRange { index: i, value: p });
            }
        }
        let mut probs = probs;
        for p in &mut probs {
            *p = p.clamp(0.0, 1.0);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SLOP {
            return Err(BinError::NotNormalized { sum });
        }
        for p in &mut probs {
            *p /= sum;
        }
        Ok(Self { partition, probs })
    }

    pub fn partition(&self) -> &BinPartition {
        &self.partition
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cumulative vector: `F[i] = sum(probs[0..=i])`. Non-decreasing with
    /// `F[K-1] = 1` up to rounding.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }
}

/// A realized outcome value together with the bin it resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub value: f64,
    pub bin_index: usize,
}

impl Outcome {
    pub fn resolve(value: f64, partition: &BinPartition) -> Result<Self, BinError> {
        Ok(Self {
            value,
            bin_index: partition.bin_of(value)?,
        })
    }
}

/// Rescales non-negative weights into a distribution. Weight vectors whose
/// sum falls below [`NORMALIZATION_FLOOR`] indicate a dead or corrupt market
/// snapshot and are rejected rather than inflated into a forecast.
pub fn normalize(weights: &[f64], partition: &BinPartition) -> Result<PredictiveDistribution, BinError> {
    if weights.len() != partition.len() {
        return Err(BinError::LengthMismatch {
            expected: partition.len(),
            actual: weights.len(),
        });
    }
    for (i, &w) in weights.iter().enumerate() {
        if !(w >= 0.0) {
            return Err(BinError::NegativeWeight { index: i, weight: w });
        }
    }
    let sum: f64 = weights.iter().sum();
    if sum < NORMALIZATION_FLOOR {
        return Err(BinError::DegenerateMass {
            sum,
            floor: NORMALIZATION_FLOOR,
        });
    }
    let probs = weights.iter().map(|w| w / sum).collect();
    Ok(PredictiveDistribution {
        partition: partition.clone(),
        probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn part(edges: &[f64]) -> BinPartition {
        BinPartition::new(edges.to_vec()).unwrap()
    }

    #[test]
    fn builds_three_bins_from_three_edges() {
        let p = part(&[0.0, 2.0, 4.0]);
        assert_eq!(p.len(), 3);
        assert_eq!(p.upper(0), Some(2.0));
        assert_eq!(p.upper(2), None);
        assert_eq!(p.width(1), Some(2.0));
    }

    #[test]
    fn single_edge_is_one_open_bin() {
        let p = part(&[5.0]);
        assert_eq!(p.len(), 1);
        assert_eq!(p.upper(0), None);
    }

    #[test]
    fn rejects_non_monotonic_edges() {
        assert!(matches!(
            BinPartition::new(vec![3.0, 3.0]),
            Err(BinError::NonMonotonicEdges { .. })
        ));
        assert!(matches!(
            BinPartition::new(vec![]),
            Err(BinError::EmptyEdges)
        ));
        assert!(matches!(
            BinPartition::new(vec![0.0, f64::NAN]),
            Err(BinError::NonMonotonicEdges { .. })
        ));
    }

    #[test]
    fn boundary_value_maps_to_higher_bin() {
        let p = part(&[0.0, 2.0, 4.0]);
        assert_eq!(p.bin_of(2.0).unwrap(), 1);
        assert_eq!(p.bin_of(1.9).unwrap(), 0);
        assert_eq!(p.bin_of(100.0).unwrap(), 2);
    }

    #[test]
    fn below_floor_is_an_error() {
        let p = part(&[0.0, 2.0]);
        assert!(matches!(
            p.bin_of(-0.1),
            Err(BinError::BelowPartition { .. })
        ));
    }

    #[test]
    fn normalize_passes_through_unit_sum() {
        let p = part(&[0.0, 1.0, 2.0]);
        let d = normalize(&[0.2, 0.2, 0.6], &p).unwrap();
        for (got, want) in d.probs().iter().zip([0.2, 0.2, 0.6]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_divides_by_total() {
        let p = part(&[0.0, 1.0, 2.0]);
        let d = normalize(&[0.5, 0.5, 1.0], &p).unwrap();
        for (got, want) in d.probs().iter().zip([0.25, 0.25, 0.5]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_dead_and_negative_weights() {
        let p = part(&[0.0, 1.0, 2.0]);
        assert!(matches!(
            normalize(&[0.0, 0.0, 0.0], &p),
            Err(BinError::DegenerateMass { .. })
        ));
        assert!(matches!(
            normalize(&[0.5, -0.1, 0.7], &p),
            Err(BinError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn cdf_is_a_running_sum() {
        let p = part(&[0.0, 1.0, 2.0]);
        let d = PredictiveDistribution::new(p.clone(), vec![0.1, 0.3, 0.6]).unwrap();
        let f = d.cdf();
        assert!((f[0] - 0.1).abs() < 1e-12);
        assert!((f[1] - 0.4).abs() < 1e-12);
        assert!((f[2] - 1.0).abs() < 1e-12);

        let point = PredictiveDistribution::new(p.clone(), vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(point.cdf(), vec![1.0, 1.0, 1.0]);
        let top = PredictiveDistribution::new(p, vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(top.cdf(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn distribution_rejects_bad_vectors() {
        let p = part(&[0.0, 1.0]);
        assert!(matches!(
            PredictiveDistribution::new(p.clone(), vec![0.5]),
            Err(BinError::LengthMismatch { .. })
        ));
        assert!(matches!(
            PredictiveDistribution::new(p.clone(), vec![1.3, -0.3]),
            Err(BinError::ProbOutOfRange { .. })
        ));
        assert!(matches!(
            PredictiveDistribution::new(p, vec![0.5, 0.4]),
            Err(BinError::NotNormalized { .. })
        ));
    }

    proptest! {
        #[test]
        fn bin_of_is_monotone(mut a in 0.0..100.0f64, mut b in 0.0..100.0f64) {
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            let p = part(&[0.0, 10.0, 25.0, 60.0]);
            prop_assert!(p.bin_of(a).unwrap() <= p.bin_of(b).unwrap());
        }

        #[test]
        fn shared_boundary_always_picks_higher_bin(i in 1usize..4) {
            let p = part(&[0.0, 10.0, 25.0, 60.0]);
            prop_assert_eq!(p.bin_of(p.edges()[i]).unwrap(), i);
        }

        #[test]
        fn cdf_differencing_recovers_probs(raw in proptest::collection::vec(0.01..1.0f64, 2..8)) {
            let edges: Vec<f64> = (0..raw.len()).map(|i| i as f64).collect();
            let p = BinPartition::new(edges).unwrap();
            let d = normalize(&raw, &p).unwrap();
            let f = d.cdf();
            let mut prev = 0.0;
            for (i, &fi) in f.iter().enumerate() {
                prop_assert!((fi - prev - d.probs()[i]).abs() < 1e-12);
                prev = fi;
            }
        }

        #[test]
        fn normalize_is_idempotent(raw in proptest::collection::vec(0.01..1.0f64, 2..8)) {
            let edges: Vec<f64> = (0..raw.len()).map(|i| i as f64).collect();
            let p = BinPartition::new(edges).unwrap();
            let once = normalize(&raw, &p).unwrap();
            let twice = normalize(once.probs(), &p).unwrap();
            for (a, b) in once.probs().iter().zip(twice.probs()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
