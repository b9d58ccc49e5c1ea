use std::sync::Arc;
use std::time::Duration;

use serde_json::Value;

use super::{default_timeout, IngestError, RateLimiter, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

/// Blocking HTTP client with shared rate limiting and retries on transport
/// errors, 429 and 5xx responses.
pub(crate) struct HttpClient {
    client: reqwest::blocking::Client,
    limiter: Arc<RateLimiter>,
    retry: RetryPolicy,
}

pub(crate) struct Response {
    pub status: u16,
    pub body: String,
}

impl HttpClient {
    pub fn new(limiter: Arc<RateLimiter>, retry: RetryPolicy) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(default_timeout())
            .build()
            .map_err(|e| IngestError::InvalidSource(e.to_string()))?;
        Ok(HttpClient { client, limiter, retry })
    }

    pub fn post_json(&self, url: &str, body: &Value) -> Result<Response> {
        self.send(url, || self.client.post(url).json(body))
    }

    pub fn get(&self, url: &str, headers: &[(&str, &str)]) -> Result<Response> {
        self.send(url, || {
            headers
                .iter()
                .fold(self.client.get(url), |req, (k, v)| req.header(*k, *v))
        })
    }

    fn send(&self, url: &str, build: impl Fn() -> reqwest::blocking::RequestBuilder) -> Result<Response> {
        let mut delay = self.retry.base_delay;
        let mut last = String::new();
        for attempt in 0..self.retry.attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            self.limiter.acquire();
            match build().send() {
                Ok(resp) => {
                    let status = resp.status().as_u16();
                    let body = resp.text().unwrap_or_default();
                    if status == 429 || status >= 500 {
                        last = format!("HTTP {status}");
                        continue;
                    }
                    return Ok(Response { status, body });
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(IngestError::EndpointUnavailable {
            endpoint: url.to_string(),
            reason: last,
        })
    }
}

impl Response {
    pub fn json(&self) -> Result<Value> {
        serde_json::from_str(&self.body).map_err(|e| IngestError::parse(e.to_string(), &self.body))
    }
}
