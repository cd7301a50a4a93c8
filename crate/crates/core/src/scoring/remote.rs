use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_probability, ImportanceScore, ImportanceScorer, ScoringError, DEFAULT_THRESHOLD};
use crate::http::{JsonClient, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteClassifierConfig {
    pub url: String,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_timeout() -> u64 {
    60
}
fn default_in_flight() -> usize {
    4
}

impl RemoteClassifierConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            threshold: DEFAULT_THRESHOLD,
            timeout_secs: default_timeout(),
            max_in_flight: default_in_flight(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    statement: &'a str,
    context: &'a str,
}

#[derive(Deserialize)]
struct ScoreResponse {
    probability: f64,
}

/// Client for a sequence-pair classifier served over HTTP:
/// `POST /score {"statement", "context"}` returns `{"probability"}`.
/// Pair encoding and truncation happen on the server.
#[derive(Debug)]
pub struct RemoteClassifier {
    client: JsonClient,
    threshold: f64,
}

impl RemoteClassifier {
    pub fn new(config: &RemoteClassifierConfig) -> Result<Self, ScoringError> {
        if !(0.0..=1.0).contains(&config.threshold) {
            return Err(ScoringError::InvalidSpec(format!("threshold {} outside [0, 1]", config.threshold)));
        }
        let client =
            JsonClient::new(&config.url, Duration::from_secs(config.timeout_secs), config.retry, config.max_in_flight)?;
        Ok(Self { client, threshold: config.threshold })
    }
}

impl ImportanceScorer for RemoteClassifier {
    fn name(&self) -> &str {
        "remote-classifier"
    }

    fn score(&self, statement: &str, context: &str) -> Result<ImportanceScore, ScoringError> {
        let resp: ScoreResponse = self.client.post("/score", &ScoreRequest { statement, context })?;
        Ok(ImportanceScore::new(check_probability(resp.probability)?, self.threshold))
    }
}
