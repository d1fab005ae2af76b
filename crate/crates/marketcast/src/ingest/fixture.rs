//! Fixture and cache serialization: one JSON document per market, identical
//! schema for recorded and synthetic data so the two are interchangeable.

use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    ContractPriceSeries, Disease, IngestError, MarketRecord, MarketStructure, PricePoint,
    VolumePoint,
};

#[derive(Debug, Serialize, Deserialize)]
struct MarketDoc {
    market_id: String,
    disease: Disease,
    structure: MarketStructure,
    resolution_time: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<f64>>,
    contracts: Vec<ContractDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    volume: Option<Vec<(i64, f64)>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ContractDoc {
    contract_id: String,
    label: String,
    points: Vec<(i64, f64)>,
}

impl MarketDoc {
    fn into_record(self, path: &str) -> Result<MarketRecord, IngestError> {
        let record = MarketRecord {
            market_id: self.market_id,
            disease: self.disease,
            structure: self.structure,
            resolution_time: self.resolution_time,
            edges: self.edges,
            contracts: self
                .contracts
                .into_iter()
                .map(|c| ContractPriceSeries {
                    contract_id: c.contract_id,
                    label: c.label,
                    points: c
                        .points
                        .into_iter()
                        .map(|(t, price)| PricePoint { t, price })
                        .collect(),
                })
                .collect(),
            volume: self.volume.map(|v| {
                v.into_iter().map(|(t, usd)| VolumePoint { t, usd }).collect()
            }),
        };
        record
            .validate()
            .map_err(|detail| IngestError::schema(path, detail))?;
        Ok(record)
    }

    fn from_record(record: &MarketRecord) -> Self {
        Self {
            market_id: record.market_id.clone(),
            disease: record.disease,
            structure: record.structure,
            resolution_time: record.resolution_time,
            edges: record.edges.clone(),
            contracts: record
                .contracts
                .iter()
                .map(|c| ContractDoc {
                    contract_id: c.contract_id.clone(),
                    label: c.label.clone(),
                    points: c.points.iter().map(|p| (p.t, p.price)).collect(),
                })
                .collect(),
            volume: record
                .volume
                .as_ref()
                .map(|v| v.iter().map(|p| (p.t, p.usd)).collect()),
        }
    }
}

/// Reads one market document, validating every record invariant.
pub fn read_market(path: &Path) -> Result<MarketRecord, IngestError> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let doc: MarketDoc = serde_json::from_str(&text)
        .map_err(|e| IngestError::schema(&shown, format!("line {}: {e}", e.line())))?;
    doc.into_record(&shown)
}

/// Writes one market document atomically (temp file, then rename).
pub fn write_market(path: &Path, record: &MarketRecord) -> Result<(), IngestError> {
    let doc = MarketDoc::from_record(record);
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| IngestError::Decode(e.to_string()))?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads a fixture set: a directory of per-market `*.json` documents, or a
/// single file holding either one document or an array of them. Markets come
/// back sorted by id so downstream output is order-stable.
pub fn load_fixture(path: &Path) -> Result<Vec<MarketRecord>, IngestError> {
    let shown = path.display().to_string();
    let mut records = Vec::new();
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(IngestError::schema(&shown, "no .json market documents"));
        }
        for file in files {
            records.push(read_market(&file)?);
        }
    } else {
        let text = fs::read_to_string(path)?;
        if text.trim().is_empty() {
            return Err(IngestError::schema(&shown, "empty fixture file"));
        }
        if text.trim_start().starts_with('[') {
            let docs: Vec<MarketDoc> = serde_json::from_str(&text)
                .map_err(|e| IngestError::schema(&shown, format!("line {}: {e}", e.line())))?;
            if docs.is_empty() {
                return Err(IngestError::schema(&shown, "empty market array"));
            }
            for doc in docs {
                records.push(doc.into_record(&shown)?);
            }
        } else {
            records.push(read_market(path)?);
        }
    }
    records.sort_by(|a, b| a.market_id.cmp(&b.market_id));
    for pair in records.windows(2) {
        if pair[0].market_id == pair[1].market_id {
            return Err(IngestError::schema(
                &shown,
                format!("duplicate market_id {}", pair[0].market_id),
            ));
        }
    }
    Ok(records)
}
