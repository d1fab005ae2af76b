//! Converts a market's contract prices into predictive distributions.
//!
//! Range-bin markets normalize one price per bin. Threshold markets quote
//! "at least N" contracts; adjacent differences of those quotes give interval
//! probabilities, with negative differences (a pricing inconsistency) clamped
//! to zero and the clamped magnitude reported as a diagnostic.

use chrono::{DateTime, Utc};
use regex::Regex;
use std::collections::BTreeSet;
use std::sync::OnceLock;
use thiserror::Error;

use crate::bins::{BinError, BinPartition, PredictiveDistribution};
use crate::ingest::{MarketRecord, MarketStructure};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ContractError {
    #[error("no numeric threshold in label {label:?}")]
    NoNumber { label: String },
    #[error("ambiguous thresholds {candidates:?} in label {label:?}")]
    AmbiguousNumber { label: String, candidates: Vec<f64> },
    #[error("duplicate threshold {threshold}")]
    DuplicateThreshold { threshold: f64 },
    #[error("contracts do not cover the partition: {detail}")]
    ContractBinMismatch { detail: String },
    #[error("partition does not match thresholds: {detail}")]
    PartitionMismatch { detail: String },
    #[error(transparent)]
    Bin(#[from] BinError),
}

/// The market price of "outcome >= threshold".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdQuote {
    pub threshold: f64,
    pub prob: f64,
}

/// One reconstructed market forecast at a point in time, with the raw
/// pre-normalization price mass and (for threshold markets) the total
/// probability clamped away to restore monotonicity.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSnapshot {
    pub time: DateTime<Utc>,
    pub dist: PredictiveDistribution,
    pub raw_sum: f64,
    pub monotonicity_violation: f64,
}

/// All snapshots of a market on its observation grid, plus how many grid
/// points were dropped for carrying no usable price mass.
#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    pub snapshots: Vec<MarketSnapshot>,
    pub skipped_degenerate: usize,
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?:\d{1,3}(?:[, ]\d{3})+|\d+(?:\.\d+)?)[kK]?").unwrap()
    })
}

fn month_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)\b(jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|jun(?:e)?|jul(?:y)?|aug(?:ust)?|sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)\b",
        )
        .unwrap()
    })
}

fn word_index(text: &str, byte_offset: usize) -> usize {
    text[..byte_offset].split_whitespace().count()
}

/// Extracts the single numeric threshold from a contract label. Accepts
/// thousands separators ("1,500", "1 500") and a k/K suffix ("2k" = 2000).
/// Date tokens are not thresholds: day-of-month and year integers within two
/// words of a month name are dropped before the ambiguity check.
pub fn parse_threshold_label(label: &str) -> Result<f64, ContractError> {
    let month_words: Vec<usize> = month_re()
        .find_iter(label)
        .map(|m| word_index(label, m.start()))
        .collect();

    let mut candidates = Vec::new();
    for m in number_re().find_iter(label) {
        let raw = m.as_str();
        let word = word_index(label, m.start());
        let kilo = raw.ends_with('k') || raw.ends_with('K');
        let digits: String = raw
            .chars()
            .filter(|c| c.is_ascii_digit() || *c == '.')
            .collect();
        let mut value: f64 = digits.parse().map_err(|_| ContractError::NoNumber {
            label: label.to_string(),
        })?;
        if kilo {
            value *= 1000.0;
        }

        let near_month = month_words.iter().any(|&mw| word.abs_diff(mw) <= 2);
        if near_month {
            let plain_int = !kilo && !raw.contains(['.', ',', ' ']);
            let is_day = plain_int && raw.len() <= 2 && (1.0..=31.0).contains(&value);
            let is_year = plain_int && raw.len() == 4 && (1900.0..=2100.0).contains(&value);
            if is_day || is_year {
                continue;
            }
        }
        candidates.push(value);
    }

    match candidates.len() {
        0 => Err(ContractError::NoNumber {
            label: label.to_string(),
        }),
        1 => Ok(candidates[0]),
        _ => Err(ContractError::AmbiguousNumber {
            label: label.to_string(),
            candidates,
        }),
    }
}

/// Partition implied by a threshold ladder: `[0, N_1, ..., N_m]`, the leading
/// zero bounding the "below the smallest threshold" bin (case counts cannot
/// be negative). A ladder starting at exactly 0 has no below-bin.
pub fn threshold_partition(quotes: &[ThresholdQuote]) -> Result<BinPartition, ContractError> {
    let thresholds = sorted_thresholds(quotes)?;
    let mut edges = Vec::with_capacity(thresholds.len() + 1);
    if thresholds[0] > 0.0 {
        edges.push(0.0);
    }
    edges.extend(thresholds);
    Ok(BinPartition::new(edges)?)
}

fn sorted_thresholds(quotes: &[ThresholdQuote]) -> Result<Vec<f64>, ContractError> {
    if quotes.is_empty() {
        return Err(ContractError::ContractBinMismatch {
            detail: "no threshold quotes".into(),
        });
    }
    let mut thresholds: Vec<f64> = quotes.iter().map(|q| q.threshold).collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("finite thresholds"));
    for pair in thresholds.windows(2) {
        if pair[0] == pair[1] {
            return Err(ContractError::DuplicateThreshold { threshold: pair[0] });
        }
    }
    Ok(thresholds)
}

/// Differences adjacent threshold quotes into bin probabilities. With sorted
/// thresholds N_1 < ... < N_m and quotes q_1 ... q_m: mass below N_1 is
/// 1 - q_1, mass in [N_j, N_{j+1}) is q_j - q_{j+1}, mass in [N_m, inf) is
/// q_m. Negative differences are clamped to zero (their total magnitude is
/// the monotonicity violation) and the result renormalized.
pub fn thresholds_to_distribution(
    quotes: &[ThresholdQuote],
    partition: &BinPartition,
) -> Result<(PredictiveDistribution, f64, f64), ContractError> {
    let expected = threshold_partition(quotes)?;
    if expected != *partition {
        return Err(ContractError::PartitionMismatch {
            detail: format!(
                "expected edges {:?}, got {:?}",
                expected.edges(),
                partition.edges()
            ),
        });
    }

    let mut sorted: Vec<ThresholdQuote> = quotes.to_vec();
    sorted.sort_by(|a, b| a.threshold.partial_cmp(&b.threshold).expect("finite"));

    let has_below_bin = sorted[0].threshold > 0.0;
    let mut raw = Vec::with_capacity(partition.len());
    if has_below_bin {
        raw.push(1.0 - sorted[0].prob);
    }
    for pair in sorted.windows(2) {
        raw.push(pair[0].prob - pair[1].prob);
    }
    raw.push(sorted.last().unwrap().prob);

    let mut violation = 0.0;
    for mass in &mut raw {
        if *mass < 0.0 {
            violation += -*mass;
            *mass = 0.0;
        }
    }
    let raw_sum: f64 = raw.iter().sum();
    let dist = crate::bins::normalize(&raw, partition)?;
    Ok((dist, raw_sum, violation))
}

/// Maps a distribution back to the threshold quotes it implies: the quote at
/// N_j is the upper-tail mass at and above N_j.
pub fn distribution_to_quotes(dist: &PredictiveDistribution) -> Vec<ThresholdQuote> {
    let probs = dist.probs();
    let edges = dist.partition().edges();
    let start = if edges[0] == 0.0 && probs.len() > 1 { 1 } else { 0 };
    (start..edges.len())
        .map(|j| ThresholdQuote {
            threshold: edges[j],
            prob: probs[j..].iter().sum(),
        })
        .collect()
}

/// Outcome partition for a market record: range-bin markets carry explicit
/// edges, threshold markets derive theirs from contract labels.
pub fn market_partition(record: &MarketRecord) -> Result<BinPartition, ContractError> {
    match record.structure {
        MarketStructure::RangeBins => {
            let edges = record.edges.clone().ok_or_else(|| {
                ContractError::ContractBinMismatch {
                    detail: format!("market {}: range_bins without edges", record.market_id),
                }
            })?;
            Ok(BinPartition::new(edges)?)
        }
        MarketStructure::Thresholds => {
            let quotes: Vec<ThresholdQuote> = record
                .contracts
                .iter()
                .map(|c| {
                    parse_threshold_label(&c.label).map(|threshold| ThresholdQuote {
                        threshold,
                        prob: 0.0,
                    })
                })
                .collect::<Result<_, _>>()?;
            threshold_partition(&quotes)
        }
    }
}

/// One contract price per bin, normalized. Returns the distribution and the
/// raw pre-normalization price sum.
pub fn range_bins_to_distribution(
    prices: &[f64],
    partition: &BinPartition,
) -> Result<(PredictiveDistribution, f64), ContractError> {
    let raw_sum = prices.iter().sum();
    let dist = crate::bins::normalize(prices, partition)?;
    Ok((dist, raw_sum))
}

/// Reconstructs the market's forecast at every grid point where all
/// contracts have a price. The grid is the union of observed timestamps
/// rounded down to the fidelity interval; per-contract prices use
/// previous-tick lookup (a standing quote is valid until changed). Grid
/// points whose prices carry no usable mass are skipped and counted.
pub fn snapshot_series(
    record: &MarketRecord,
    partition: &BinPartition,
    fidelity_minutes: u32,
) -> Result<SnapshotSeries, ContractError> {
    // order contracts to match the partition
    let ordered: Vec<usize> = match record.structure {
        MarketStructure::RangeBins => {
            if record.contracts.len() != partition.len() {
                return Err(ContractError::ContractBinMismatch {
                    detail: format!(
                        "market {}: {} contracts for {} bins",
                        record.market_id,
                        record.contracts.len(),
                        partition.len()
                    ),
                });
            }
            (0..record.contracts.len()).collect()
        }
        MarketStructure::Thresholds => {
            let mut parsed: Vec<(usize, f64)> = Vec::with_capacity(record.contracts.len());
            for (i, c) in record.contracts.iter().enumerate() {
                parsed.push((i, parse_threshold_label(&c.label)?));
            }
            parsed.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"));
            for pair in parsed.windows(2) {
                if pair[0].1 == pair[1].1 {
                    return Err(ContractError::DuplicateThreshold { threshold: pair[0].1 });
                }
            }
            parsed.into_iter().map(|(i, _)| i).collect()
        }
    };

    let step = i64::from(fidelity_minutes) * 60;
    let grid: BTreeSet<i64> = record
        .contracts
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.t.div_euclid(step) * step))
        .collect();

    let mut snapshots = Vec::new();
    let mut skipped_degenerate = 0;
    for &t in &grid {
        let mut prices = Vec::with_capacity(ordered.len());
        let mut complete = true;
        for &idx in &ordered {
            match record.contracts[idx].price_at(t) {
                Some(p) => prices.push(p),
                None => {
                    complete = false;
                    break;
                }
            }
        }
        if !complete {
            continue;
        }

        let built = match record.structure {
            MarketStructure::RangeBins => {
                range_bins_to_distribution(&prices, partition).map(|(d, raw)| (d, raw, 0.0))
            }
            MarketStructure::Thresholds => {
                let quotes: Vec<ThresholdQuote> = ordered
                    .iter()
                    .zip(&prices)
                    .map(|(&idx, &prob)| ThresholdQuote {
                        threshold: parse_threshold_label(&record.contracts[idx].label)
                            .expect("already parsed"),
                        prob,
                    })
                    .collect();
                thresholds_to_distribution(&quotes, partition)
            }
        };
        match built {
            Ok((dist, raw_sum, monotonicity_violation)) => snapshots.push(MarketSnapshot {
                time: DateTime::from_timestamp(t, 0).expect("grid time in range"),
                dist,
                raw_sum,
                monotonicity_violation,
            }),
            Err(ContractError::Bin(BinError::DegenerateMass { .. })) => {
                skipped_degenerate += 1;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(SnapshotSeries {
        snapshots,
        skipped_degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ContractPriceSeries, Disease, PricePoint};
    use proptest::prelude::*;

    #[test]
    fn parses_thousands_separator() {
        assert_eq!(
            parse_threshold_label("Will there be at least 1,500 measles cases?").unwrap(),
            1500.0
        );
        assert_eq!(parse_threshold_label("at least 1 500 cases").unwrap(), 1500.0);
    }

    #[test]
    fn parses_k_suffix_and_drops_date_tokens() {
        assert_eq!(
            parse_threshold_label("2k+ cases by March 31, 2026").unwrap(),
            2000.0
        );
        assert_eq!(
            parse_threshold_label("Will measles hit 750 by June 2026?").unwrap(),
            750.0
        );
    }

    #[test]
    fn no_number_and_ambiguous_are_errors() {
        assert!(matches!(
            parse_threshold_label("more cases soon?"),
            Err(ContractError::NoNumber { .. })
        ));
        assert!(matches!(
            parse_threshold_label("between 100 and 200 cases"),
            Err(ContractError::AmbiguousNumber { .. })
        ));
    }

    #[test]
    fn month_word_alone_does_not_eat_thresholds() {
        // "may" as a verb is a month-regex hit, but 500 is neither a
        // day-of-month nor a year token
        assert_eq!(parse_threshold_label("cases may reach 500").unwrap(), 500.0);
    }

    fn quotes(pairs: &[(f64, f64)]) -> Vec<ThresholdQuote> {
        pairs
            .iter()
            .map(|&(threshold, prob)| ThresholdQuote { threshold, prob })
            .collect()
    }

    #[test]
    fn differences_monotone_quotes() {
        let q = quotes(&[(100.0, 0.9), (200.0, 0.6), (300.0, 0.2)]);
        let partition = threshold_partition(&q).unwrap();
        assert_eq!(partition.edges(), &[0.0, 100.0, 200.0, 300.0]);
        let (dist, raw_sum, violation) = thresholds_to_distribution(&q, &partition).unwrap();
        for (got, want) in dist.probs().iter().zip([0.1, 0.3, 0.4, 0.2]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!((raw_sum - 1.0).abs() < 1e-12);
        assert_eq!(violation, 0.0);
    }

    #[test]
    fn clamps_and_renormalizes_non_monotone_quotes() {
        let q = quotes(&[(100.0, 0.5), (200.0, 0.6)]);
        let partition = threshold_partition(&q).unwrap();
        let (dist, raw_sum, violation) = thresholds_to_distribution(&q, &partition).unwrap();
        let want = [0.5 / 1.1, 0.0, 0.6 / 1.1];
        for (got, want) in dist.probs().iter().zip(want) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
        assert!((violation - 0.1).abs() < 1e-12);
        assert!((raw_sum - 1.1).abs() < 1e-12);
    }

    #[test]
    fn single_certain_quote() {
        let q = quotes(&[(100.0, 1.0)]);
        let partition = threshold_partition(&q).unwrap();
        assert_eq!(partition.edges(), &[0.0, 100.0]);
        let (dist, _, violation) = thresholds_to_distribution(&q, &partition).unwrap();
        assert_eq!(dist.probs(), &[0.0, 1.0]);
        assert_eq!(violation, 0.0);
    }

    #[test]
    fn duplicate_threshold_rejected() {
        let q = quotes(&[(100.0, 0.5), (100.0, 0.4)]);
        assert!(matches!(
            threshold_partition(&q),
            Err(ContractError::DuplicateThreshold { .. })
        ));
    }

    #[test]
    fn range_prices_normalize() {
        let partition = BinPartition::new(vec![0.0, 1.0, 2.0]).unwrap();
        let (dist, raw) = range_bins_to_distribution(&[0.2, 0.9, 0.1], &partition).unwrap();
        let want = [1.0 / 6.0, 3.0 / 4.0, 1.0 / 12.0];
        for (got, want) in dist.probs().iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((raw - 1.2).abs() < 1e-12);

        assert!(matches!(
            range_bins_to_distribution(&[0.01, 0.01, 0.01], &partition),
            Err(ContractError::Bin(BinError::DegenerateMass { .. }))
        ));
    }

    fn contract(id: &str, label: &str, points: &[(i64, f64)]) -> ContractPriceSeries {
        ContractPriceSeries {
            contract_id: id.into(),
            label: label.into(),
            points: points.iter().map(|&(t, price)| PricePoint { t, price }).collect(),
        }
    }

    fn range_market(contracts: Vec<ContractPriceSeries>) -> MarketRecord {
        MarketRecord {
            market_id: "m".into(),
            disease: Disease::Influenza,
            structure: MarketStructure::RangeBins,
            resolution_time: DateTime::from_timestamp(10 * 3600, 0).unwrap(),
            edges: Some(vec![0.0, 2.0]),
            contracts,
            volume: None,
        }
    }

    #[test]
    fn aligned_contracts_give_one_snapshot_per_grid_point() {
        let record = range_market(vec![
            contract("a", "low", &[(0, 0.4), (3600, 0.5)]),
            contract("b", "high", &[(0, 0.6), (3600, 0.5)]),
        ]);
        let partition = BinPartition::new(vec![0.0, 2.0]).unwrap();
        let series = snapshot_series(&record, &partition, 60).unwrap();
        assert_eq!(series.snapshots.len(), 2);
        assert_eq!(series.skipped_degenerate, 0);
        assert!(series.snapshots[0].time < series.snapshots[1].time);
    }

    #[test]
    fn previous_tick_carries_prices_forward() {
        let record = range_market(vec![
            contract("a", "low", &[(0, 0.4)]),
            contract("b", "high", &[(3600, 0.6)]),
        ]);
        let partition = BinPartition::new(vec![0.0, 2.0]).unwrap();
        let series = snapshot_series(&record, &partition, 60).unwrap();
        assert_eq!(series.snapshots.len(), 1);
        assert_eq!(series.snapshots[0].time.timestamp(), 3600);
        assert!((series.snapshots[0].dist.probs()[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn missing_contract_is_a_structural_error() {
        let record = range_market(vec![contract("a", "low", &[(0, 0.4)])]);
        let partition = BinPartition::new(vec![0.0, 2.0]).unwrap();
        assert!(matches!(
            snapshot_series(&record, &partition, 60),
            Err(ContractError::ContractBinMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_grid_points_are_skipped_and_counted() {
        let record = range_market(vec![
            contract("a", "low", &[(0, 0.01), (3600, 0.5)]),
            contract("b", "high", &[(0, 0.01), (3600, 0.5)]),
        ]);
        let partition = BinPartition::new(vec![0.0, 2.0]).unwrap();
        let series = snapshot_series(&record, &partition, 60).unwrap();
        assert_eq!(series.snapshots.len(), 1);
        assert_eq!(series.skipped_degenerate, 1);
    }

    proptest! {
        // quotes -> distribution -> quotes is the identity for monotone ladders
        #[test]
        fn threshold_round_trip(raw in proptest::collection::vec(0.02..1.0f64, 2..6)) {
            let partition = BinPartition::new(
                (0..raw.len()).map(|i| 100.0 * i as f64).collect()
            ).unwrap();
            let dist = crate::bins::normalize(&raw, &partition).unwrap();
            let q = distribution_to_quotes(&dist);
            let (back, _, violation) = thresholds_to_distribution(&q, &partition).unwrap();
            prop_assert!(violation.abs() < 1e-12);
            for (a, b) in dist.probs().iter().zip(back.probs()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        // any quote vector in [0,1], monotone or not, yields a valid distribution
        #[test]
        fn adversarial_quotes_still_normalize(probs in proptest::collection::vec(0.0..=1.0f64, 1..6)) {
            let q: Vec<ThresholdQuote> = probs
                .iter()
                .enumerate()
                .map(|(i, &prob)| ThresholdQuote { threshold: 100.0 * (i + 1) as f64, prob })
                .collect();
            let partition = threshold_partition(&q).unwrap();
            let (dist, _, violation) = thresholds_to_distribution(&q, &partition).unwrap();
            let sum: f64 = dist.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(dist.probs().iter().all(|&p| p >= 0.0));
            // violation is zero exactly when the ladder is non-increasing
            let monotone = probs.windows(2).all(|w| w[1] <= w[0]);
            prop_assert_eq!(violation == 0.0, monotone);
        }
    }
}
