//! Vintage-aware store of observed cumulative surveillance values.
//!
//! Every publication is kept, revisions included, so two different questions
//! can both be answered honestly: "what was known at time t" (for evaluation
//! features, never later than t) and "what settled the market" (the first
//! publication at or after resolution).

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use thiserror::Error;

use crate::bins::{BinError, BinPartition, Outcome};
use crate::ingest::MarketRecord;

#[derive(Debug, Error)]
pub enum SurveillanceError {
    #[error("{file}:{line}: {detail}")]
    Schema {
        file: String,
        line: u64,
        detail: String,
    },
    #[error("conflicting values for {target_key} published {published}: {first} vs {second}")]
    DuplicatePublication {
        target_key: String,
        published: DateTime<Utc>,
        first: f64,
        second: f64,
    },
    #[error("market {market_id} unresolved: no publication at or after {resolution_time}")]
    Unresolved {
        market_id: String,
        resolution_time: DateTime<Utc>,
    },
    #[error(transparent)]
    Bin(#[from] BinError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One published observation of a cumulative quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurveillanceSnapshot {
    pub published: DateTime<Utc>,
    pub value: f64,
}

/// All publications for one target, sorted by publication time. Values need
/// not be monotone across publications: corrections happen.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveillanceSeries {
    pub target_key: String,
    pub source: String,
    snapshots: Vec<SurveillanceSnapshot>,
}

impl SurveillanceSeries {
    pub fn snapshots(&self) -> &[SurveillanceSnapshot] {
        &self.snapshots
    }

    /// Value of the latest publication at or before `t`; `None` before the
    /// first publication. This is the only lookup evaluation-time features
    /// may use.
    pub fn value_as_of(&self, t: DateTime<Utc>) -> Option<f64> {
        let idx = self.snapshots.partition_point(|s| s.published <= t);
        if idx == 0 {
            None
        } else {
            Some(self.snapshots[idx - 1].value)
        }
    }

    /// First publication at or after `t`, used for settlement.
    pub fn first_publication_at_or_after(&self, t: DateTime<Utc>) -> Option<&SurveillanceSnapshot> {
        let idx = self.snapshots.partition_point(|s| s.published < t);
        self.snapshots.get(idx)
    }
}

/// Publication dates without a time get noon UTC so runs are reproducible;
/// the convention is recorded in run metadata.
pub fn parse_published(text: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Ok(dt.with_timezone(&Utc));
    }
    if let Ok(date) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Ok(date.and_hms_opt(12, 0, 0).expect("valid time").and_utc());
    }
    Err(format!("unparseable timestamp {text:?} (want RFC 3339 or YYYY-MM-DD)"))
}

/// Ingests snapshot CSVs (columns `target_key, published, value, source`)
/// from a file or a directory of files. Files may overlap: identical
/// (target, published, value) rows are deduplicated, conflicting values are
/// an error. Rows may arrive in any order.
pub fn ingest_snapshots(path: &Path) -> Result<BTreeMap<String, SurveillanceSeries>, SurveillanceError> {
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in std::fs::read_dir(path)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == "csv") {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    if files.is_empty() {
        return Err(SurveillanceError::Schema {
            file: path.display().to_string(),
            line: 0,
            detail: "no .csv files".into(),
        });
    }

    // (target, published) -> (value, source)
    let mut rows: BTreeMap<(String, DateTime<Utc>), (f64, String)> = BTreeMap::new();
    for file in &files {
        let shown = file.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(file)
            .map_err(|e| SurveillanceError::Schema {
                file: shown.clone(),
                line: 0,
                detail: e.to_string(),
            })?;
        let headers = reader
            .headers()
            .map_err(|e| SurveillanceError::Schema {
                file: shown.clone(),
                line: 1,
                detail: e.to_string(),
            })?
            .clone();
        let col = |name: &str| -> Result<usize, SurveillanceError> {
            headers.iter().position(|h| h == name).ok_or_else(|| {
                SurveillanceError::Schema {
                    file: shown.clone(),
                    line: 1,
                    detail: format!("missing column {name:?}"),
                }
            })
        };
        let (c_target, c_published, c_value, c_source) = (
            col("target_key")?,
            col("published")?,
            col("value")?,
            col("source")?,
        );

        for record in reader.records() {
            let record = record.map_err(|e| SurveillanceError::Schema {
                file: shown.clone(),
                line: 0,
                detail: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |idx: usize| -> Result<&str, SurveillanceError> {
                record.get(idx).ok_or_else(|| SurveillanceError::Schema {
                    file: shown.clone(),
                    line,
                    detail: format!("missing field {idx}"),
                })
            };
            let target_key = field(c_target)?.to_string();
            let published = parse_published(field(c_published)?).map_err(|detail| {
                SurveillanceError::Schema {
                    file: shown.clone(),
                    line,
                    detail,
                }
            })?;
            let value: f64 = field(c_value)?.parse().map_err(|e| SurveillanceError::Schema {
                file: shown.clone(),
                line,
                detail: format!("bad value: {e}"),
            })?;
            if !value.is_finite() || value < 0.0 {
                return Err(SurveillanceError::Schema {
                    file: shown.clone(),
                    line,
                    detail: format!("cumulative value must be finite and non-negative, got {value}"),
                });
            }
            let source = field(c_source)?.to_string();

            match rows.entry((target_key.clone(), published)) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert((value, source));
                }
                std::collections::btree_map::Entry::Occupied(existing) => {
                    if existing.get().0 != value {
                        return Err(SurveillanceError::DuplicatePublication {
                            target_key,
                            published,
                            first: existing.get().0,
                            second: value,
                        });
                    }
                }
            }
        }
    }

    let mut out: BTreeMap<String, SurveillanceSeries> = BTreeMap::new();
    for ((target_key, published), (value, source)) in rows {
        let series = out
            .entry(target_key.clone())
            .or_insert_with(|| SurveillanceSeries {
                target_key,
                source,
                snapshots: Vec::new(),
            });
        series.snapshots.push(SurveillanceSnapshot { published, value });
    }
    Ok(out)
}

/// Resolves a market against the vintage store: settlement takes the first
/// publication at or after the market's resolution time (markets resolve on
/// the first report), then maps that value to a bin.
pub fn resolve_outcome(
    market: &MarketRecord,
    series: &SurveillanceSeries,
    partition: &BinPartition,
) -> Result<Outcome, SurveillanceError> {
    let settlement = series
        .first_publication_at_or_after(market.resolution_time)
        .ok_or_else(|| SurveillanceError::Unresolved {
            market_id: market.market_id.clone(),
            resolution_time: market.resolution_time,
        })?;
    Ok(Outcome::resolve(settlement.value, partition)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ContractPriceSeries, Disease, MarketStructure, PricePoint};
    use proptest::prelude::*;
    use std::io::Write;

    fn day(d: u32) -> DateTime<Utc> {
        NaiveDate::from_ymd_opt(2026, 1, d)
            .unwrap()
            .and_hms_opt(12, 0, 0)
            .unwrap()
            .and_utc()
    }

    fn series(points: &[(u32, f64)]) -> SurveillanceSeries {
        SurveillanceSeries {
            target_key: "measles/us/cases_cum".into(),
            source: "test".into(),
            snapshots: points
                .iter()
                .map(|&(d, value)| SurveillanceSnapshot {
                    published: day(d),
                    value,
                })
                .collect(),
        }
    }

    fn write_csv(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "target_key,published,value,source").unwrap();
        write!(f, "{body}").unwrap();
        path
    }

    #[test]
    fn ingests_and_sorts_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "m.csv",
            "measles/us,2026-01-15,14,cdc\nmeasles/us,2026-01-01,10,cdc\nmeasles/us,2026-01-08T09:30:00Z,12,cdc\n",
        );
        let all = ingest_snapshots(&path).unwrap();
        let s = &all["measles/us"];
        let values: Vec<f64> = s.snapshots().iter().map(|p| p.value).collect();
        assert_eq!(values, vec![10.0, 12.0, 14.0]);
        assert!(s.snapshots().windows(2).all(|w| w[0].published < w[1].published));
    }

    #[test]
    fn identical_duplicates_dedup_but_conflicts_error() {
        let dir = tempfile::tempdir().unwrap();
        let a = "measles/us,2026-01-01,10,cdc\nmeasles/us,2026-01-01,10,cdc\n";
        let path = write_csv(dir.path(), "dup.csv", a);
        let all = ingest_snapshots(&path).unwrap();
        assert_eq!(all["measles/us"].snapshots().len(), 1);

        let b = "measles/us,2026-01-01,10,cdc\nmeasles/us,2026-01-01,11,cdc\n";
        let path = write_csv(dir.path(), "conflict.csv", b);
        assert!(matches!(
            ingest_snapshots(&path),
            Err(SurveillanceError::DuplicatePublication { .. })
        ));
    }

    #[test]
    fn bad_rows_name_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(dir.path(), "bad.csv", "measles/us,not-a-date,10,cdc\n");
        match ingest_snapshots(&path) {
            Err(SurveillanceError::Schema { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn value_as_of_examples() {
        let s = series(&[(1, 10.0), (8, 14.0)]);
        assert_eq!(s.value_as_of(day(5)), Some(10.0));
        assert_eq!(s.value_as_of(day(8)), Some(14.0)); // boundary inclusive
        assert_eq!(s.value_as_of(day(1) - chrono::Duration::days(1)), None);
    }

    fn market_resolving(d: u32) -> MarketRecord {
        MarketRecord {
            market_id: "m".into(),
            disease: Disease::Measles,
            structure: MarketStructure::Thresholds,
            resolution_time: day(d),
            edges: None,
            contracts: vec![ContractPriceSeries {
                contract_id: "c".into(),
                label: "at least 2 cases".into(),
                points: vec![PricePoint { t: 0, price: 0.5 }],
            }],
            volume: None,
        }
    }

    #[test]
    fn settlement_uses_first_post_resolution_publication() {
        let partition = BinPartition::new(vec![0.0, 2.0, 4.0, 6.0]).unwrap();
        let s = series(&[(1, 3.0), (9, 6.2)]);
        let outcome = resolve_outcome(&market_resolving(7), &s, &partition).unwrap();
        assert_eq!(outcome.value, 6.2);
        assert_eq!(outcome.bin_index, 3);
    }

    #[test]
    fn boundary_settlement_picks_higher_bin() {
        let partition = BinPartition::new(vec![0.0, 2.0, 4.0, 6.0]).unwrap();
        let s = series(&[(9, 4.0)]);
        let outcome = resolve_outcome(&market_resolving(7), &s, &partition).unwrap();
        assert_eq!(outcome.bin_index, 2);
    }

    #[test]
    fn unresolved_when_no_later_publication() {
        let partition = BinPartition::new(vec![0.0, 2.0]).unwrap();
        let s = series(&[(1, 3.0)]);
        assert!(matches!(
            resolve_outcome(&market_resolving(7), &s, &partition),
            Err(SurveillanceError::Unresolved { .. })
        ));
    }

    proptest! {
        // increasing t never reaches back to an earlier publication
        #[test]
        fn value_as_of_is_monotone_in_publication_order(
            queries in proptest::collection::vec(1u32..28, 2),
        ) {
            let s = series(&[(3, 10.0), (10, 9.0), (17, 12.0), (24, 15.0)]);
            let (a, b) = (queries[0].min(queries[1]), queries[0].max(queries[1]));
            let pub_index = |t: DateTime<Utc>| s.snapshots().partition_point(|p| p.published <= t);
            prop_assert!(pub_index(day(a)) <= pub_index(day(b)));
            if a >= 24 {
                prop_assert_eq!(s.value_as_of(day(a)), Some(15.0));
            }
        }
    }
}
