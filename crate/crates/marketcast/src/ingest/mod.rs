//! Market data acquisition: HTTP price-history retrieval, an on-disk cache,
//! and an offline fixture format shared by recorded and synthetic data.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod cache;
mod client;
mod fixture;

pub use cache::{load_or_fetch, ContractRef, MarketDescriptor};
pub use client::{
    ApiConfig, PriceHistoryClient, ReqwestTransport, RetryPolicy, Transport, TransportResponse,
    ENV_API_AUTH_HEADER, ENV_API_AUTH_VALUE, ENV_API_BASE,
};
pub use fixture::{load_fixture, read_market, write_market};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("http {status}: {body}")]
    Http { status: u16, body: String },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed payload: {0}")]
    Decode(String),
    #[error("offline and no cached record for market {market_id}")]
    CacheMiss { market_id: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: {detail}")]
    Schema { path: String, detail: String },
    #[error("missing configuration: {0}")]
    Config(String),
}

impl IngestError {
    pub(crate) fn schema(path: impl Into<String>, detail: impl Into<String>) -> Self {
        Self::Schema {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disease {
    Influenza,
    Measles,
}

impl std::fmt::Display for Disease {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Disease::Influenza => write!(f, "influenza"),
            Disease::Measles => write!(f, "measles"),
        }
    }
}

/// How a market expresses its outcome space: one contract per disjoint
/// interval, or a ladder of "at least N" contracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketStructure {
    RangeBins,
    Thresholds,
}

/// Timestamped price for one contract, unix seconds and a probability-scale
/// price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub t: i64,
    pub price: f64,
}

/// A single contract's full price history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractPriceSeries {
    pub contract_id: String,
    pub label: String,
    pub points: Vec<PricePoint>,
}

impl ContractPriceSeries {
    /// Checks the series invariants: strictly increasing timestamps, prices
    /// in [0, 1].
    pub fn validate(&self) -> Result<(), String> {
        for w in self.points.windows(2) {
            if w[1].t <= w[0].t {
                return Err(format!(
                    "contract {}: timestamps not strictly increasing at t={}",
                    self.contract_id, w[1].t
                ));
            }
        }
        for p in &self.points {
            if !p.price.is_finite() || p.price < 0.0 || p.price > 1.0 {
                return Err(format!(
                    "contract {}: price {} at t={} outside [0, 1]",
                    self.contract_id, p.price, p.t
                ));
            }
        }
        Ok(())
    }

    /// Last price at or before `t` (previous-tick lookup).
    pub fn price_at(&self, t: i64) -> Option<f64> {
        let idx = self.points.partition_point(|p| p.t <= t);
        if idx == 0 {
            None
        } else {
            Some(self.points[idx - 1].price)
        }
    }
}

/// Cumulative traded notional at a point in time, USD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumePoint {
    pub t: i64,
    pub usd: f64,
}

/// A market's contract set, structure, resolution time, and price/volume
/// series. For range-bin markets `edges` pins the outcome partition;
/// threshold markets derive theirs from contract labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketRecord {
    pub market_id: String,
    pub disease: Disease,
    pub structure: MarketStructure,
    pub resolution_time: DateTime<Utc>,
    pub edges: Option<Vec<f64>>,
    pub contracts: Vec<ContractPriceSeries>,
    pub volume: Option<Vec<VolumePoint>>,
}

impl MarketRecord {
    /// Full invariant check; the fixture loader and the fetch path both run
    /// this so no `MarketRecord` in circulation can violate it.
    pub fn validate(&self) -> Result<(), String> {
        if self.contracts.is_empty() {
            return Err(format!("market {}: no contracts", self.market_id));
        }
        let resolution_ts = self.resolution_time.timestamp();
        for c in &self.contracts {
            c.validate()
                .map_err(|e| format!("market {}: {e}", self.market_id))?;
            if let Some(last) = c.points.last() {
                if last.t > resolution_ts {
                    return Err(format!(
                        "market {}: contract {} has a price after resolution ({} > {})",
                        self.market_id, c.contract_id, last.t, resolution_ts
                    ));
                }
            }
        }
        if self.structure == MarketStructure::RangeBins {
            match &self.edges {
                None => {
                    return Err(format!(
                        "market {}: range_bins structure requires explicit edges",
                        self.market_id
                    ))
                }
                Some(edges) => {
                    crate::bins::BinPartition::new(edges.clone())
                        .map_err(|e| format!("market {}: bad edges: {e}", self.market_id))?;
                }
            }
        }
        if let Some(volume) = &self.volume {
            for w in volume.windows(2) {
                if w[1].t <= w[0].t {
                    return Err(format!(
                        "market {}: volume timestamps not strictly increasing at t={}",
                        self.market_id, w[1].t
                    ));
                }
                if w[1].usd < w[0].usd {
                    return Err(format!(
                        "market {}: cumulative volume decreases at t={}",
                        self.market_id, w[1].t
                    ));
                }
            }
            if volume.iter().any(|v| !v.usd.is_finite() || v.usd < 0.0) {
                return Err(format!("market {}: negative or non-finite volume", self.market_id));
            }
        }
        Ok(())
    }

    /// Total traded notional: the last cumulative volume point.
    pub fn total_volume(&self) -> Option<f64> {
        self.volume.as_ref().and_then(|v| v.last()).map(|p| p.usd)
    }
}
