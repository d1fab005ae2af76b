//! HTTP retrieval of contract price histories.
//!
//! The transport is a trait so tests (and recorded-response replays) can run
//! without a network. The real transport is a thin blocking reqwest wrapper.

use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use super::{ContractPriceSeries, IngestError, PricePoint};

pub const ENV_API_BASE: &str = "MARKETCAST_API_BASE";
pub const ENV_API_AUTH_HEADER: &str = "MARKETCAST_API_AUTH_HEADER";
pub const ENV_API_AUTH_VALUE: &str = "MARKETCAST_API_AUTH_VALUE";

/// Minimal HTTP GET abstraction, injectable for tests.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<TransportResponse, IngestError>;
}

#[derive(Debug, Clone)]
pub struct TransportResponse {
    pub status: u16,
    pub body: String,
}

/// Blocking reqwest-backed transport.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, IngestError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for ReqwestTransport {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<TransportResponse, IngestError> {
        let mut req = self.client.get(url);
        for (name, value) in headers {
            req = req.header(name, value);
        }
        let resp = req.send().map_err(|e| IngestError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .text()
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        Ok(TransportResponse { status, body })
    }
}

/// Bounded exponential backoff for rate-limited requests.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: u32,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            base: Duration::from_secs(1),
            factor: 2,
            max_attempts: 5,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        self.base * self.factor.saturating_pow(attempt)
    }
}

/// Where and how to reach the price-history API. Base URL and the optional
/// auth header come from the environment or a config file, never from code.
#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub base_url: String,
    pub auth: Option<(String, String)>,
    pub retry: RetryPolicy,
}

impl ApiConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            auth: None,
            retry: RetryPolicy::default(),
        }
    }

    /// Reads `MARKETCAST_API_BASE` (required) plus the optional auth header
    /// pair `MARKETCAST_API_AUTH_HEADER` / `MARKETCAST_API_AUTH_VALUE`.
    pub fn from_env() -> Result<Self, IngestError> {
        let base_url = std::env::var(ENV_API_BASE)
            .map_err(|_| IngestError::Config(format!("{ENV_API_BASE} is not set")))?;
        let auth = match (
            std::env::var(ENV_API_AUTH_HEADER),
            std::env::var(ENV_API_AUTH_VALUE),
        ) {
            (Ok(h), Ok(v)) => Some((h, v)),
            (Ok(_), Err(_)) | (Err(_), Ok(_)) => {
                return Err(IngestError::Config(format!(
                    "{ENV_API_AUTH_HEADER} and {ENV_API_AUTH_VALUE} must be set together"
                )))
            }
            _ => None,
        };
        Ok(Self {
            base_url,
            auth,
            retry: RetryPolicy::default(),
        })
    }
}

#[derive(Deserialize)]
struct HistoryPayload {
    history: Vec<HistoryPoint>,
}

#[derive(Deserialize)]
struct HistoryPoint {
    t: i64,
    p: PriceValue,
}

/// The API emits prices as either a JSON number or a decimal string.
#[derive(Deserialize)]
#[serde(untagged)]
enum PriceValue {
    Num(f64),
    Text(String),
}

impl PriceValue {
    fn to_f64(&self) -> Result<f64, IngestError> {
        match self {
            PriceValue::Num(v) => Ok(*v),
            PriceValue::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|e| IngestError::Decode(format!("price {s:?}: {e}"))),
        }
    }
}

pub struct PriceHistoryClient {
    transport: Arc<dyn Transport>,
    config: ApiConfig,
}

impl PriceHistoryClient {
    pub fn new(transport: Arc<dyn Transport>, config: ApiConfig) -> Self {
        Self { transport, config }
    }

    /// Fetches one contract's price history at the requested fidelity.
    /// Out-of-range raw prices are clamped to [0, 1] and logged; duplicate
    /// timestamps keep the last value so the series invariants always hold.
    pub fn fetch_price_history(
        &self,
        contract_id: &str,
        label: &str,
        fidelity_minutes: u32,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<ContractPriceSeries, IngestError> {
        assert!(fidelity_minutes >= 1, "fidelity must be at least one minute");
        assert!(start < end, "start must precede end");
        let url = format!(
            "{}/prices-history?market={}&fidelity={}&startTs={}&endTs={}",
            self.config.base_url.trim_end_matches('/'),
            contract_id,
            fidelity_minutes,
            start.timestamp(),
            end.timestamp(),
        );
        let headers: Vec<(String, String)> = self.config.auth.iter().cloned().collect();

        let mut attempt = 0;
        let response = loop {
            let response = self.transport.get(&url, &headers)?;
            if response.status == 429 {
                attempt += 1;
                if attempt >= self.config.retry.max_attempts {
                    return Err(IngestError::RateLimited { attempts: attempt });
                }
                let delay = self.config.retry.delay(attempt - 1);
                log::warn!("rate limited fetching {contract_id}, retry {attempt} in {delay:?}");
                std::thread::sleep(delay);
                continue;
            }
            break response;
        };

        if !(200..300).contains(&response.status) {
            let mut body = response.body;
            body.truncate(200);
            return Err(IngestError::Http {
                status: response.status,
                body,
            });
        }

        let payload: HistoryPayload = serde_json::from_str(&response.body)
            .map_err(|e| IngestError::Decode(e.to_string()))?;

        let mut points = Vec::with_capacity(payload.history.len());
        for hp in payload.history {
            let raw = hp.p.to_f64()?;
            if !raw.is_finite() {
                return Err(IngestError::Decode(format!(
                    "non-finite price at t={} for {contract_id}",
                    hp.t
                )));
            }
            let price = raw.clamp(0.0, 1.0);
            if price != raw {
                log::warn!(
                    "clamped out-of-range price {raw} -> {price} at t={} for {contract_id}",
                    hp.t
                );
            }
            points.push(PricePoint { t: hp.t, price });
        }
        points.sort_by_key(|p| p.t);
        points.dedup_by_key(|p| p.t);

        let series = ContractPriceSeries {
            contract_id: contract_id.to_string(),
            label: label.to_string(),
            points,
        };
        series.validate().map_err(IngestError::Decode)?;
        Ok(series)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct CannedTransport {
        responses: Vec<TransportResponse>,
        calls: AtomicU32,
    }

    impl CannedTransport {
        fn new(responses: Vec<TransportResponse>) -> Self {
            Self {
                responses,
                calls: AtomicU32::new(0),
            }
        }
    }

    impl Transport for CannedTransport {
        fn get(&self, _url: &str, _headers: &[(String, String)]) -> Result<TransportResponse, IngestError> {
            let i = self.calls.fetch_add(1, Ordering::SeqCst) as usize;
            Ok(self.responses[i.min(self.responses.len() - 1)].clone())
        }
    }

    fn client_with(responses: Vec<TransportResponse>) -> (PriceHistoryClient, Arc<CannedTransport>) {
        let transport = Arc::new(CannedTransport::new(responses));
        let mut config = ApiConfig::new("https://example.test/api");
        config.retry = RetryPolicy {
            base: Duration::from_millis(1),
            factor: 2,
            max_attempts: 5,
        };
        (
            PriceHistoryClient::new(transport.clone(), config),
            transport,
        )
    }

    fn window() -> (DateTime<Utc>, DateTime<Utc>) {
        (
            DateTime::from_timestamp(1_700_000_000, 0).unwrap(),
            DateTime::from_timestamp(1_700_604_800, 0).unwrap(),
        )
    }

    #[test]
    fn recorded_response_decodes_bit_identical() {
        // mixed string/number prices, unordered timestamps
        let body = r#"{"history": [{"t": 200, "p": "0.25"}, {"t": 100, "p": 0.125}, {"t": 300, "p": 0.5}]}"#;
        let (client, _) = client_with(vec![TransportResponse {
            status: 200,
            body: body.into(),
        }]);
        let (start, end) = window();
        let series = client
            .fetch_price_history("tok", "label", 60, start, end)
            .unwrap();
        assert_eq!(
            series.points,
            vec![
                PricePoint { t: 100, price: 0.125 },
                PricePoint { t: 200, price: 0.25 },
                PricePoint { t: 300, price: 0.5 },
            ]
        );
    }

    #[test]
    fn clamps_out_of_range_prices() {
        let body = r#"{"history": [{"t": 100, "p": 1.2}, {"t": 200, "p": -0.1}]}"#;
        let (client, _) = client_with(vec![TransportResponse {
            status: 200,
            body: body.into(),
        }]);
        let (start, end) = window();
        let series = client
            .fetch_price_history("tok", "label", 60, start, end)
            .unwrap();
        assert_eq!(series.points[0].price, 1.0);
        assert_eq!(series.points[1].price, 0.0);
    }

    #[test]
    fn surfaces_http_errors() {
        let (client, _) = client_with(vec![TransportResponse {
            status: 404,
            body: "not found".into(),
        }]);
        let (start, end) = window();
        let err = client
            .fetch_price_history("unknown", "label", 60, start, end)
            .unwrap_err();
        assert!(matches!(err, IngestError::Http { status: 404, .. }));
    }

    #[test]
    fn retries_rate_limits_then_succeeds() {
        let limited = TransportResponse {
            status: 429,
            body: "slow down".into(),
        };
        let ok = TransportResponse {
            status: 200,
            body: r#"{"history": [{"t": 100, "p": 0.5}]}"#.into(),
        };
        let (client, transport) = client_with(vec![limited.clone(), limited, ok]);
        let (start, end) = window();
        let series = client
            .fetch_price_history("tok", "label", 60, start, end)
            .unwrap();
        assert_eq!(series.points.len(), 1);
        assert_eq!(transport.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_max_attempts() {
        let limited = TransportResponse {
            status: 429,
            body: "slow down".into(),
        };
        let (client, transport) = client_with(vec![limited]);
        let (start, end) = window();
        let err = client
            .fetch_price_history("tok", "label", 60, start, end)
            .unwrap_err();
        assert!(matches!(err, IngestError::RateLimited { attempts: 5 }));
        assert_eq!(transport.calls.load(Ordering::SeqCst), 5);
    }
}
