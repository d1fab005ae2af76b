//! Market-inefficiency diagnostics: probability mass on outcomes already
//! ruled out by observed data, and traded-volume summaries.

use std::collections::BTreeMap;

use chrono::{DateTime, Datelike};
use serde::Serialize;

use crate::bins::PredictiveDistribution;
use crate::ingest::MarketRecord;

/// Probability assigned to bins wholly below the latest observed cumulative
/// value. A cumulative target can never fall, so this mass is guaranteed to
/// lose; a bin merely containing the floor is not provably impossible and is
/// not counted.
pub fn impossible_mass(dist: &PredictiveDistribution, known_floor: f64) -> f64 {
    let partition = dist.partition();
    dist.probs()
        .iter()
        .enumerate()
        .take(dist.len() - 1)
        .filter(|(i, _)| partition.upper(*i).expect("bounded bin") <= known_floor)
        .map(|(_, p)| p)
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct MarketVolume {
    pub market_id: String,
    /// Last cumulative notional, USD; `None` when the archive has no volume.
    pub total_usd: Option<f64>,
}

/// Per-market totals plus ISO-week buckets of traded notional.
#[derive(Debug, Clone, Serialize)]
pub struct VolumeSummary {
    pub markets: Vec<MarketVolume>,
    /// (ISO year, ISO week) -> traded notional in that week, USD.
    pub weekly_usd: BTreeMap<(i32, u32), f64>,
    pub total_usd: f64,
    pub markets_missing_volume: usize,
}

/// Sums trading activity across markets. Volume series are cumulative, so
/// weekly buckets take increments between consecutive points; markets
/// without volume data are reported as missing and excluded from aggregates.
pub fn volume_summary(records: &[MarketRecord]) -> VolumeSummary {
    let mut markets = Vec::with_capacity(records.len());
    let mut weekly_usd: BTreeMap<(i32, u32), f64> = BTreeMap::new();
    let mut total_usd = 0.0;
    let mut missing = 0;

    for record in records {
        let total = record.total_volume();
        if let Some(points) = &record.volume {
            let mut prev = 0.0;
            for point in points {
                let increment = point.usd - prev;
                prev = point.usd;
                if increment <= 0.0 {
                    continue;
                }
                let when = DateTime::from_timestamp(point.t, 0).expect("volume time in range");
                let week = when.iso_week();
                *weekly_usd.entry((week.year(), week.week())).or_insert(0.0) += increment;
            }
            total_usd += total.unwrap_or(0.0);
        } else {
            missing += 1;
        }
        markets.push(MarketVolume {
            market_id: record.market_id.clone(),
            total_usd: total,
        });
    }

    VolumeSummary {
        markets,
        weekly_usd,
        total_usd,
        markets_missing_volume: missing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bins::BinPartition;
    use crate::ingest::{ContractPriceSeries, Disease, MarketStructure, PricePoint, VolumePoint};

    fn dist(edges: &[f64], probs: &[f64]) -> PredictiveDistribution {
        PredictiveDistribution::new(BinPartition::new(edges.to_vec()).unwrap(), probs.to_vec())
            .unwrap()
    }

    #[test]
    fn counts_only_bins_wholly_below_the_floor() {
        let d = dist(&[0.0, 2.0, 4.0, 6.0, 8.0], &[0.05, 0.03, 0.4, 0.32, 0.2]);
        // [0,2) and [2,4) fully below 4.5; [4,6) contains it and is excluded
        assert!((impossible_mass(&d, 4.5) - 0.08).abs() < 1e-12);
        assert_eq!(impossible_mass(&d, 0.0), 0.0);
        // floor above all edges: everything but the open top bin
        assert!((impossible_mass(&d, 100.0) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn impossible_mass_never_grows_as_the_floor_rises() {
        let d = dist(&[0.0, 1.0, 2.0, 3.0], &[0.4, 0.3, 0.2, 0.1]);
        let mut prev = impossible_mass(&d, 0.0);
        for step in 1..40 {
            let cur = impossible_mass(&d, step as f64 * 0.1);
            assert!(cur >= prev - 1e-15);
            prev = cur;
        }
    }

    fn market(id: &str, volume: Option<Vec<(i64, f64)>>) -> MarketRecord {
        MarketRecord {
            market_id: id.into(),
            disease: Disease::Influenza,
            structure: MarketStructure::RangeBins,
            resolution_time: DateTime::from_timestamp(2_000_000_000, 0).unwrap(),
            edges: Some(vec![0.0, 1.0]),
            contracts: vec![
                ContractPriceSeries {
                    contract_id: "a".into(),
                    label: "low".into(),
                    points: vec![PricePoint { t: 0, price: 0.5 }],
                },
                ContractPriceSeries {
                    contract_id: "b".into(),
                    label: "high".into(),
                    points: vec![PricePoint { t: 0, price: 0.5 }],
                },
            ],
            volume: volume.map(|v| v.into_iter().map(|(t, usd)| VolumePoint { t, usd }).collect()),
        }
    }

    #[test]
    fn totals_use_the_last_cumulative_point() {
        let summary = volume_summary(&[
            market("m1", Some(vec![(1_700_000_000, 100.0), (1_700_100_000, 250.0)])),
            market("m2", Some(vec![(1_700_000_000, 50.0)])),
            market("m3", None),
        ]);
        assert_eq!(summary.total_usd, 300.0);
        assert_eq!(summary.markets_missing_volume, 1);
        assert_eq!(summary.markets[0].total_usd, Some(250.0));
        assert_eq!(summary.markets[2].total_usd, None);
        let weekly: f64 = summary.weekly_usd.values().sum();
        assert!((weekly - 300.0).abs() < 1e-9);
    }

    #[test]
    fn weekly_buckets_split_on_iso_weeks() {
        // 1700000000 = 2023-11-14 (week 46); a week later lands in week 47
        let summary = volume_summary(&[market(
            "m1",
            Some(vec![(1_700_000_000, 100.0), (1_700_604_800, 180.0)]),
        )]);
        assert_eq!(summary.weekly_usd.len(), 2);
        let values: Vec<f64> = summary.weekly_usd.values().copied().collect();
        assert!((values[0] - 100.0).abs() < 1e-9);
        assert!((values[1] - 80.0).abs() < 1e-9);
    }
}
