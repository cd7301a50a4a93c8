use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProviderError;
use crate::http::{JsonClient, RetryPolicy};

/// Text to dense vector. Implementations must be deterministic and keep a
/// constant dimension.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    fn dimension(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Offline stand-in for a sentence encoder: signed feature hashing of
/// character 3- to 5-grams of the lowercased, whitespace-normalized text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedNgramProvider {
    dimension: usize,
}

impl HashedNgramProvider {
    pub const DEFAULT_DIMENSION: usize = 512;

    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }
}

impl Default for HashedNgramProvider {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIMENSION)
    }
}

impl EmbeddingProvider for HashedNgramProvider {
    fn name(&self) -> &str {
        "hashed-ngram"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let normalized = crate::model::normalize_whitespace(&text.to_lowercase());
        let chars: Vec<char> = format!(" {normalized} ").chars().collect();
        let mut out = vec![0.0; self.dimension];
        if normalized.is_empty() {
            return Ok(out);
        }
        let mut buf = String::new();
        for n in 3..=5 {
            for window in chars.windows(n) {
                buf.clear();
                buf.extend(window);
                let h = fnv1a(buf.as_bytes());
                let slot = (h % self.dimension as u64) as usize;
                let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
                out[slot] += sign;
            }
        }
        Ok(out)
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        texts.par_iter().map(|t| self.embed(t)).collect()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct InfoResponse {
    dimension: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteEmbeddingConfig {
    pub url: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_timeout_secs() -> u64 {
    30
}
fn default_batch() -> usize {
    32
}
fn default_in_flight() -> usize {
    4
}

impl RemoteEmbeddingConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            timeout_secs: default_timeout_secs(),
            batch_size: default_batch(),
            max_in_flight: default_in_flight(),
            retry: RetryPolicy::default(),
        }
    }
}

/// Client for an out-of-process encoder: `GET /info` advertises the
/// dimension, `POST /embed {"texts": [...]}` returns `{"vectors": [[...]]}`.
#[derive(Debug)]
pub struct RemoteEmbeddingProvider {
    client: JsonClient,
    dimension: usize,
    batch_size: usize,
}

impl RemoteEmbeddingProvider {
    pub fn connect(config: &RemoteEmbeddingConfig) -> Result<Self, ProviderError> {
        let client = JsonClient::new(
            &config.url,
            Duration::from_secs(config.timeout_secs),
            config.retry,
            config.max_in_flight,
        )?;
        let info: InfoResponse = client.get("/info")?;
        if info.dimension == 0 {
            return Err(ProviderError::Protocol("advertised dimension is 0".into()));
        }
        Ok(Self { client, dimension: info.dimension, batch_size: config.batch_size.max(1) })
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let resp: EmbedResponse = self.client.post("/embed", &EmbedRequest { texts })?;
        if resp.vectors.len() != texts.len() {
            return Err(ProviderError::Protocol(format!(
                "asked for {} vectors, received {}",
                texts.len(),
                resp.vectors.len()
            )));
        }
        for v in &resp.vectors {
            if v.len() != self.dimension {
                return Err(ProviderError::Dimension { expected: self.dimension, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ProviderError::Protocol("non-finite vector entry".into()));
            }
        }
        Ok(resp.vectors)
    }
}

impl EmbeddingProvider for RemoteEmbeddingProvider {
    fn name(&self) -> &str {
        "remote-http"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        Ok(self.request(&[text])?.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let chunks: Vec<&[&str]> = texts.chunks(self.batch_size).collect();
        let parts: Result<Vec<_>, _> = chunks.par_iter().map(|c| self.request(c)).collect();
        Ok(parts?.into_iter().flatten().collect())
    }
}
