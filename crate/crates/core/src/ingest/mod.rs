//! Data acquisition: fixture directories, live JSON-RPC and explorer
//! endpoints, and a persistent per-mint cache so every run can be replayed
//! offline.

mod cache;
mod explorer;
mod fixture;
mod http;
mod ratelimit;
mod rpc;
pub mod schema;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::model::{Address, ModelError, Signature, Timestamp, TokenRecord, TransactionRecord};

pub use cache::Cache;
pub use explorer::{ExplorerBackend, ExplorerPaths};
pub use fixture::FixtureBackend;
pub use http::RetryPolicy;
pub use ratelimit::RateLimiter;
pub use rpc::RpcBackend;
pub use schema::{read_record, write_record, SCHEMA_VERSION};

/// Signatures requested per page; also the prefilter's sample size.
pub const SIGNATURE_PAGE_SIZE: usize = 1000;

pub const ENV_RPC_URL: &str = "RUGSCAN_RPC_URL";
pub const ENV_EXPLORER_URL: &str = "RUGSCAN_EXPLORER_URL";
pub const ENV_EXPLORER_KEY: &str = "RUGSCAN_EXPLORER_KEY";
pub const ENV_CACHE_DIR: &str = "RUGSCAN_CACHE_DIR";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("endpoint {endpoint} unavailable: {reason}")]
    EndpointUnavailable { endpoint: String, reason: String },
    #[error("unknown address {0}")]
    UnknownAddress(Address),
    #[error("transaction {0} not found")]
    NotFound(Signature),
    /// Malformed payload. `raw` keeps the offending payload for debugging.
    #[error("malformed payload: {reason}")]
    ParseError { reason: String, raw: String },
    #[error("incomplete data for {mint}: missing {}", missing.join(", "))]
    PartialData { mint: Address, missing: Vec<String> },
    #[error("invalid mint address {0:?}")]
    InvalidMint(String),
    #[error("invalid data source: {0}")]
    InvalidSource(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, IngestError::EndpointUnavailable { .. })
    }

    pub(crate) fn parse(reason: impl Into<String>, raw: impl Into<String>) -> Self {
        IngestError::ParseError {
            reason: reason.into(),
            raw: raw.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

/// Base58 text of 32 to 44 characters.
pub fn validate_mint(mint: &str) -> Result<()> {
    let len_ok = (32..=44).contains(&mint.len());
    if len_ok && bs58::decode(mint).into_vec().is_ok() {
        Ok(())
    } else {
        Err(IngestError::InvalidMint(mint.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceKind {
    LiveRpc { endpoint: String },
    ExplorerApi {
        endpoint: String,
        api_key: Option<String>,
        /// JSON-RPC endpoint used for raw transactions.
        rpc_endpoint: String,
    },
    Fixture { dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSource {
    pub kind: SourceKind,
    /// Maximum live requests per second.
    pub rate_limit: f64,
}

impl DataSource {
    pub fn fixture(dir: impl Into<PathBuf>) -> Self {
        DataSource {
            kind: SourceKind::Fixture { dir: dir.into() },
            rate_limit: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SourceKind::Fixture { .. } => Ok(()),
            _ if !(self.rate_limit > 0.0 && self.rate_limit.is_finite()) => Err(IngestError::InvalidSource(format!(
                "live sources need a finite rate limit > 0, got {}",
                self.rate_limit
            ))),
            _ => Ok(()),
        }
    }

    /// Short description for manifests and logs.
    pub fn describe(&self) -> String {
        match &self.kind {
            SourceKind::LiveRpc { endpoint } => format!("rpc:{endpoint}"),
            SourceKind::ExplorerApi { endpoint, .. } => format!("explorer:{endpoint}"),
            SourceKind::Fixture { dir } => format!("fixture:{}", dir.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SignatureInfo {
    pub signature: Signature,
    pub timestamp: Timestamp,
}

/// One upstream. Implementations must be shareable across worker threads.
pub trait Backend: Send + Sync {
    /// At most `limit` most recent signatures touching `address`, newest first.
    fn fetch_signatures(&self, address: &str, limit: usize) -> Result<Vec<SignatureInfo>>;

    fn fetch_transaction(&self, signature: &str) -> Result<TransactionRecord>;

    fn fetch_token_bundle(&self, mint: &str) -> Result<TokenRecord>;

    fn describe(&self) -> String;
}

/// How the cache is consulted before the backend.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CachePolicy {
    /// Serve cached records; fetch and store the rest.
    #[default]
    PreferCache,
    /// Always fetch, falling back to the cache if the endpoint is down.
    Refresh,
    /// Never touch the backend.
    CacheOnly,
}

/// Front door to a backend plus optional cache.
pub struct Ingestor {
    backend: Box<dyn Backend>,
    cache: Option<Cache>,
    policy: CachePolicy,
}

impl Ingestor {
    pub fn new(backend: Box<dyn Backend>, cache: Option<Cache>, policy: CachePolicy) -> Self {
        Ingestor { backend, cache, policy }
    }

    /// Builds the backend named by `source`. Live backends share one rate
    /// limiter.
    pub fn from_source(source: &DataSource, cache: Option<Cache>, policy: CachePolicy, retry: RetryPolicy) -> Result<Self> {
        source.validate()?;
        let backend: Box<dyn Backend> = match &source.kind {
            SourceKind::Fixture { dir } => Box::new(FixtureBackend::open(dir)?),
            SourceKind::LiveRpc { endpoint } => {
                let limiter = Arc::new(RateLimiter::new(source.rate_limit));
                Box::new(RpcBackend::new(endpoint, limiter, retry)?)
            }
            SourceKind::ExplorerApi {
                endpoint,
                api_key,
                rpc_endpoint,
            } => {
                let limiter = Arc::new(RateLimiter::new(source.rate_limit));
                let rpc = RpcBackend::new(rpc_endpoint, limiter.clone(), retry.clone())?;
                Box::new(ExplorerBackend::new(
                    endpoint,
                    api_key.clone(),
                    ExplorerPaths::default(),
                    rpc,
                    limiter,
                    retry,
                )?)
            }
        };
        Ok(Ingestor::new(backend, cache, policy))
    }

    pub fn backend(&self) -> &dyn Backend {
        self.backend.as_ref()
    }

    pub fn cache(&self) -> Option<&Cache> {
        self.cache.as_ref()
    }

    pub fn fetch_signatures(&self, address: &str, limit: usize) -> Result<Vec<SignatureInfo>> {
        if limit == 0 {
            return Err(IngestError::InvalidSource("signature limit must be >= 1".into()));
        }
        self.backend.fetch_signatures(address, limit)
    }

    pub fn fetch_transaction(&self, signature: &str) -> Result<TransactionRecord> {
        self.backend.fetch_transaction(signature)
    }

    /// Full record for `mint`. Anything fetched is written to the cache
    /// before it is returned.
    pub fn fetch_token_bundle(&self, mint: &str) -> Result<TokenRecord> {
        validate_mint(mint)?;
        let cached = || -> Result<Option<TokenRecord>> {
            match &self.cache {
                Some(c) => c.get(mint),
                None => Ok(None),
            }
        };
        match self.policy {
            CachePolicy::CacheOnly => {
                return cached()?.ok_or_else(|| IngestError::EndpointUnavailable {
                    endpoint: "cache".into(),
                    reason: format!("{mint} not cached"),
                })
            }
            CachePolicy::PreferCache => {
                if let Some(r) = cached()? {
                    return Ok(r);
                }
            }
            CachePolicy::Refresh => {}
        }
        match self.backend.fetch_token_bundle(mint) {
            Ok(record) => {
                if let Some(c) = &self.cache {
                    c.put(&record)?;
                }
                Ok(record)
            }
            Err(e) if e.is_retryable() => cached()?.ok_or(e),
            Err(e) => Err(e),
        }
    }
}

pub(crate) fn default_timeout() -> Duration {
    Duration::from_secs(30)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mint_syntax() {
        assert!(validate_mint("So11111111111111111111111111111111111111112").is_ok());
        assert!(validate_mint("short").is_err());
        // 0, O, I and l are not base58
        assert!(validate_mint("0o11111111111111111111111111111111111111112").is_err());
    }

    #[test]
    fn live_sources_need_rate_limit() {
        let s = DataSource {
            kind: SourceKind::LiveRpc {
                endpoint: "http://x".into(),
            },
            rate_limit: 0.0,
        };
        assert!(s.validate().is_err());
        assert!(DataSource::fixture("/tmp").validate().is_ok());
    }
}
