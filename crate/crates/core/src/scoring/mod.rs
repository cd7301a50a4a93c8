//! Statement importance given context: the scorer interface and its
//! implementations.

mod context;
mod lexrank;
mod prompt;
mod remote;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use context::{build_context, context_article, trim_words, ContextPolicy, ContextSpec, Summarizer};
pub use lexrank::{context_sentences, lexrank_centrality, lexrank_score, top_k_threshold, LexRankParams, LexRankScorer};
pub use prompt::{
    select_demonstrations, ChatClient, ChatConfig, ChatMessage, ChatSummarizer, Demonstration, HttpChatClient, PromptScorer,
    PromptTemplate,
};
pub use remote::{RemoteClassifier, RemoteClassifierConfig};

use crate::http::HttpError;
use crate::textproc::TextError;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScoringError {
    #[error("no {band} article available for event {event}")]
    ContextUnavailable { event: String, band: String },
    #[error("biased-pair context needs a summarizer")]
    NoSummarizer,
    #[error("invalid context spec: {0}")]
    InvalidSpec(String),
    #[error("context has no sentences")]
    EmptyContext,
    #[error("centrality did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("scoring endpoint failed: {0}")]
    Http(#[from] HttpError),
    #[error("scoring protocol error: {0}")]
    Protocol(String),
    #[error("unparsable model response: {raw:?}")]
    Unparsable { raw: String },
    #[error(transparent)]
    Text(#[from] TextError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScore {
    pub probability: f64,
    pub important: bool,
    pub threshold: f64,
}

impl ImportanceScore {
    /// Important when `probability >= threshold`.
    pub fn new(probability: f64, threshold: f64) -> Self {
        Self { probability, important: probability >= threshold, threshold }
    }
}

pub trait ImportanceScorer: Send + Sync {
    fn name(&self) -> &str;

    fn score(&self, statement: &str, context: &str) -> Result<ImportanceScore, ScoringError>;

    /// Scores `(statement, context)` pairs; output order follows input order.
    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<ImportanceScore>, ScoringError> {
        pairs.par_iter().map(|(s, c)| self.score(s, c)).collect()
    }
}

/// Fixed probabilities per statement text, ignoring context. Unknown
/// statements score 0.
#[derive(Debug, Clone, Default)]
pub struct LookupScorer {
    table: HashMap<String, f64>,
    threshold: f64,
}

impl LookupScorer {
    pub fn new(table: HashMap<String, f64>, threshold: f64) -> Self {
        Self { table, threshold }
    }

    /// Listed statements score 1, all others 0.
    pub fn important(statements: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self::new(statements.into_iter().map(|s| (s.into(), 1.0)).collect(), DEFAULT_THRESHOLD)
    }
}

impl ImportanceScorer for LookupScorer {
    fn name(&self) -> &str {
        "lookup"
    }

    fn score(&self, statement: &str, _context: &str) -> Result<ImportanceScore, ScoringError> {
        let p = self.table.get(statement).copied().unwrap_or(0.0);
        Ok(ImportanceScore::new(p, self.threshold))
    }
}

pub(crate) fn check_probability(p: f64) -> Result<f64, ScoringError> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(ScoringError::Protocol(format!("probability {p} outside [0, 1]")))
    }
}
