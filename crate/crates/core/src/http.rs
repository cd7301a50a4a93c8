//! Blocking JSON-over-HTTP helpers shared by the remote clients.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum HttpError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Decode(String),
}

impl HttpError {
    fn retryable(&self) -> bool {
        match self {
            HttpError::Transport(_) => true,
            HttpError::Status { status, .. } => *status == 429 || *status >= 500,
            HttpError::Decode(_) => false,
        }
    }
}

/// Exponential backoff: attempt `k` (1-based) waits `base * 2^(k-1)` before
/// attempt `k+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    #[serde(with = "millis")]
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, backoff_base: Duration::from_millis(200) }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self { max_attempts: 1, backoff_base: Duration::ZERO }
    }

    pub fn delay_after(&self, attempt: u32) -> Duration {
        self.backoff_base.saturating_mul(1u32 << (attempt.saturating_sub(1)).min(16))
    }

    fn run<T>(&self, mut op: impl FnMut() -> Result<T, HttpError>) -> Result<T, HttpError> {
        let attempts = self.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if e.retryable() && attempt < attempts => {
                    tracing::debug!(attempt, error = %e, "retrying request");
                    thread::sleep(self.delay_after(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// Counting semaphore bounding concurrent requests to one endpoint.
#[derive(Debug)]
pub struct InFlightLimit {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlightLimit {
    pub fn new(limit: usize) -> Self {
        Self { limit: limit.max(1), active: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut active = self.active.lock().unwrap();
            while *active >= self.limit {
                active = self.freed.wait(active).unwrap();
            }
            *active += 1;
        }
        let out = f();
        *self.active.lock().unwrap() -= 1;
        self.freed.notify_one();
        out
    }
}

#[derive(Debug)]
pub struct JsonClient {
    client: reqwest::blocking::Client,
    base_url: String,
    retry: RetryPolicy,
    limit: InFlightLimit,
}

impl JsonClient {
    pub fn new(base_url: &str, timeout: Duration, retry: RetryPolicy, max_in_flight: usize) -> Result<Self, HttpError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| HttpError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            base_url: base_url.trim_end_matches('/').to_string(),
            retry,
            limit: InFlightLimit::new(max_in_flight),
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn get<R: DeserializeOwned>(&self, path: &str) -> Result<R, HttpError> {
        let url = format!("{}{}", self.base_url, path);
        self.limit.run(|| self.retry.run(|| decode(self.client.get(&url).send())))
    }

    pub fn get_text(&self, path_and_query: &str) -> Result<String, HttpError> {
        let url = format!("{}{}", self.base_url, path_and_query);
        self.limit.run(|| {
            self.retry.run(|| {
                let resp = self.client.get(&url).send().map_err(|e| HttpError::Transport(e.to_string()))?;
                let resp = check_status(resp)?;
                resp.text().map_err(|e| HttpError::Transport(e.to_string()))
            })
        })
    }

    pub fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, HttpError> {
        let url = format!("{}{}", self.base_url, path);
        self.limit.run(|| self.retry.run(|| decode(self.client.post(&url).json(body).send())))
    }
}

fn check_status(resp: reqwest::blocking::Response) -> Result<reqwest::blocking::Response, HttpError> {
    let status = resp.status();
    if status.is_success() {
        return Ok(resp);
    }
    let body = resp.text().unwrap_or_default();
    Err(HttpError::Status { status: status.as_u16(), body })
}

fn decode<R: DeserializeOwned>(sent: reqwest::Result<reqwest::blocking::Response>) -> Result<R, HttpError> {
    let resp = check_status(sent.map_err(|e| HttpError::Transport(e.to_string()))?)?;
    let bytes = resp.bytes().map_err(|e| HttpError::Transport(e.to_string()))?;
    serde_json::from_slice(&bytes).map_err(|e| HttpError::Decode(e.to_string()))
}
