//! Missing-important-statement detection per document, and what is computed
//! from it: outlet scores, bias-band summaries, correlation and metrics.

mod metrics;
mod outlets;
mod stats;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metrics::{evaluate, ClassMetrics, MetricReport};
pub use outlets::{band_summary, outlet_scores, BandSummary, OutletScore, BAND_ORDER};
pub use stats::{correlate, pearson, ranks, spearman, Correlation, StatsError};

use crate::model::{Corpus, Event, Statement};
use crate::scoring::{build_context, ContextSpec, ImportanceScore, ImportanceScorer, ScoringError, Summarizer};
use crate::textproc::{fit_tfidf, vectorize_batch, weighted_cosine, EmbeddingProvider, HybridVector, ProviderError, TextError,
    TfidfState,
};

pub const DEFAULT_PRESENCE_THRESHOLD: f64 = 0.8;
pub const DEFAULT_FAILURE_BUDGET: f64 = 0.1;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DetectError {
    #[error("event {event}: {source}")]
    Context { event: String, source: ScoringError },
    #[error("event {event}: {failed} of {total} statements failed to score")]
    FailureBudget { event: String, failed: usize, total: usize },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("invalid detect params: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectParams {
    pub presence_threshold: f64,
    #[serde(default = "half")]
    pub dense_weight: f64,
    /// Largest tolerated share of statements that fail to score.
    #[serde(default = "budget")]
    pub failure_budget: f64,
}

fn half() -> f64 {
    0.5
}

fn budget() -> f64 {
    DEFAULT_FAILURE_BUDGET
}

impl Default for DetectParams {
    fn default() -> Self {
        Self { presence_threshold: DEFAULT_PRESENCE_THRESHOLD, dense_weight: 0.5, failure_budget: DEFAULT_FAILURE_BUDGET }
    }
}

impl DetectParams {
    pub fn with_threshold(mut self, t: f64) -> Self {
        self.presence_threshold = t;
        self
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        let bad = |m: String| Err(DetectError::InvalidParams(m));
        if !(-1.0..=1.0).contains(&self.presence_threshold) {
            return bad(format!("presence threshold {} outside [-1, 1]", self.presence_threshold));
        }
        if !(0.0..=1.0).contains(&self.dense_weight) {
            return bad(format!("dense weight {} outside [0, 1]", self.dense_weight));
        }
        if !(0.0..=1.0).contains(&self.failure_budget) {
            return bad(format!("failure budget {} outside [0, 1]", self.failure_budget));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Presence {
    pub present: bool,
    pub similarity: f64,
}

/// Best similarity of `statement` against `document`; present iff it reaches
/// `threshold`. An empty document never contains anything.
pub fn presence_in(
    statement: &HybridVector,
    document: &[&HybridVector],
    threshold: f64,
    dense_weight: f64,
) -> Result<Presence, TextError> {
    let mut best: Option<f64> = None;
    for d in document {
        let s = weighted_cosine(statement, d, dense_weight)?;
        best = Some(best.map_or(s, |b: f64| b.max(s)));
    }
    Ok(match best {
        Some(similarity) => Presence { present: similarity >= threshold, similarity },
        None => Presence { present: false, similarity: 0.0 },
    })
}

/// Text-level presence check with TF-IDF fit over the statement and the
/// document together.
pub fn check_presence(
    statement: &str,
    document: &[&str],
    provider: &dyn EmbeddingProvider,
    threshold: f64,
) -> Result<Presence, DetectError> {
    if document.is_empty() {
        return Ok(Presence { present: false, similarity: 0.0 });
    }
    let texts: Vec<&str> = std::iter::once(statement).chain(document.iter().copied()).collect();
    let vectors = vectorize_batch(&texts, &fit_or_empty(&texts)?, provider)?;
    let doc: Vec<&HybridVector> = vectors[1..].iter().collect();
    Ok(presence_in(&vectors[0], &doc, threshold, 0.5)?)
}

/// Texts without any word token still get a dense block.
fn fit_or_empty(texts: &[&str]) -> Result<TfidfState, TextError> {
    match fit_tfidf(texts) {
        Err(TextError::EmptyVocabulary) => Ok(TfidfState::empty()),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredStatement {
    pub statement_id: String,
    pub text: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CherryPick {
    pub statement_id: String,
    pub text: String,
    pub probability: f64,
    /// Closest match inside the document.
    pub best_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentReport {
    pub article_id: String,
    pub outlet_id: String,
    pub cherry_picked: Vec<CherryPick>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFailure {
    pub statement_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CherryReport {
    pub event_id: String,
    pub scorer: String,
    pub presence_threshold: f64,
    pub statements: usize,
    /// The event's important statements, one per distinct text.
    pub important: Vec<ScoredStatement>,
    pub documents: Vec<DocumentReport>,
    #[serde(default)]
    pub failures: Vec<ScoreFailure>,
}

impl CherryReport {
    pub fn document(&self, article_id: &str) -> Option<&DocumentReport> {
        self.documents.iter().find(|d| d.article_id == article_id)
    }

    pub fn total_cherry_picked(&self) -> usize {
        self.documents.iter().map(|d| d.cherry_picked.len()).sum()
    }
}

/// Builds the context once, then runs [`detect_with_context`].
pub fn detect_cherry_picking(
    event: &Event,
    corpus: &Corpus,
    scorer: &dyn ImportanceScorer,
    context: &ContextSpec,
    summarizer: Option<&dyn Summarizer>,
    provider: &dyn EmbeddingProvider,
    params: &DetectParams,
) -> Result<CherryReport, DetectError> {
    let ctx = build_context(event, corpus, context, summarizer)
        .map_err(|source| DetectError::Context { event: event.id.clone(), source })?;
    detect_with_context(event, corpus, scorer, &ctx, provider, params)
}

/// For every document of the event, the important statements of the whole
/// event that the document lacks.
pub fn detect_with_context(
    event: &Event,
    corpus: &Corpus,
    scorer: &dyn ImportanceScorer,
    context: &str,
    provider: &dyn EmbeddingProvider,
    params: &DetectParams,
) -> Result<CherryReport, DetectError> {
    params.validate()?;
    let index = corpus.index();
    let mut statements: Vec<&Statement> =
        event.article_ids.iter().flat_map(|a| index.statements_of(a).iter().copied()).collect();
    statements.sort_by(|a, b| a.id.cmp(&b.id));

    let (scores, failures) = score_all(&statements, context, scorer)?;
    let budget_exceeded = failures.len() as f64 > params.failure_budget * statements.len() as f64;
    if budget_exceeded {
        return Err(DetectError::FailureBudget { event: event.id.clone(), failed: failures.len(), total: statements.len() });
    }
    // S_e is a set of sentences: a text repeated across documents is one
    // member, carried by its lowest statement id.
    let mut seen = BTreeSet::new();
    let important: Vec<(usize, f64)> = scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.filter(|s| s.important).map(|s| (i, s.probability)))
        .filter(|(i, _)| seen.insert(statements[*i].text.as_str()))
        .collect();

    let vectors = statement_vectors(&statements, provider)?;
    let mut article_ids = event.article_ids.clone();
    article_ids.sort();
    let documents = article_ids
        .par_iter()
        .map(|article_id| {
            let doc: Vec<&HybridVector> = statements
                .iter()
                .enumerate()
                .filter(|(_, s)| &s.article_id == article_id)
                .map(|(i, _)| &vectors[i])
                .collect();
            let mut cherry_picked = Vec::new();
            for &(i, probability) in &important {
                let p = presence_in(&vectors[i], &doc, params.presence_threshold, params.dense_weight)?;
                if !p.present {
                    cherry_picked.push(CherryPick {
                        statement_id: statements[i].id.clone(),
                        text: statements[i].text.clone(),
                        probability,
                        best_similarity: p.similarity,
                    });
                }
            }
            let outlet_id = index.articles.get(article_id.as_str()).map(|a| a.outlet_id.clone()).unwrap_or_default();
            Ok(DocumentReport { article_id: article_id.clone(), outlet_id, cherry_picked })
        })
        .collect::<Result<Vec<_>, TextError>>()?;

    Ok(CherryReport {
        event_id: event.id.clone(),
        scorer: scorer.name().to_string(),
        presence_threshold: params.presence_threshold,
        statements: statements.len(),
        important: important
            .iter()
            .map(|&(i, probability)| ScoredStatement {
                statement_id: statements[i].id.clone(),
                text: statements[i].text.clone(),
                probability,
            })
            .collect(),
        documents,
        failures,
    })
}

type Scored = (Vec<Option<ImportanceScore>>, Vec<ScoreFailure>);

/// Scores the whole batch at once; if that fails, falls back to one call per
/// statement so single failures can be recorded.
fn score_all(statements: &[&Statement], context: &str, scorer: &dyn ImportanceScorer) -> Result<Scored, DetectError> {
    let pairs: Vec<(&str, &str)> = statements.iter().map(|s| (s.text.as_str(), context)).collect();
    match scorer.score_batch(&pairs) {
        Ok(scores) => Ok((scores.into_iter().map(Some).collect(), Vec::new())),
        Err(e) => {
            tracing::warn!(error = %e, "batch scoring failed, retrying per statement");
            let results: Vec<Result<ImportanceScore, ScoringError>> =
                pairs.par_iter().map(|(s, c)| scorer.score(s, c)).collect();
            let mut failures = Vec::new();
            let scores = results
                .into_iter()
                .zip(statements)
                .map(|(r, s)| match r {
                    Ok(score) => Some(score),
                    Err(e) => {
                        failures.push(ScoreFailure { statement_id: s.id.clone(), message: e.to_string() });
                        None
                    }
                })
                .collect();
            Ok((scores, failures))
        }
    }
}

/// Hybrid vectors for the event's statements. TF-IDF is fit over the
/// distinct statement texts, so repeating a sentence does not shift weights.
fn statement_vectors(statements: &[&Statement], provider: &dyn EmbeddingProvider) -> Result<Vec<HybridVector>, DetectError> {
    let distinct: Vec<&str> =
        statements.iter().map(|s| s.text.as_str()).collect::<BTreeSet<_>>().into_iter().collect();
    if distinct.is_empty() {
        return Ok(Vec::new());
    }
    let vectors = vectorize_batch(&distinct, &fit_or_empty(&distinct)?, provider)?;
    let by_text: BTreeMap<&str, &HybridVector> = distinct.iter().copied().zip(&vectors).collect();
    Ok(statements.iter().map(|s| by_text[s.text.as_str()].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEvent {
    pub event_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectRun {
    pub reports: Vec<CherryReport>,
    pub skipped: Vec<SkippedEvent>,
}

/// Runs detection over every event in parallel. Events that fail are listed
/// in `skipped` with the reason; reports come back in event id order.
pub fn detect_all(
    corpus: &Corpus,
    scorer: &dyn ImportanceScorer,
    context: &ContextSpec,
    summarizer: Option<&dyn Summarizer>,
    provider: &dyn EmbeddingProvider,
    params: &DetectParams,
) -> Result<DetectRun, DetectError> {
    params.validate()?;
    let mut events: Vec<&Event> = corpus.events.iter().collect();
    events.sort_by(|a, b| a.id.cmp(&b.id));
    let results: Vec<(String, Result<CherryReport, DetectError>)> = events
        .par_iter()
        .map(|e| (e.id.clone(), detect_cherry_picking(e, corpus, scorer, context, summarizer, provider, params)))
        .collect();
    let mut run = DetectRun::default();
    for (event_id, r) in results {
        match r {
            Ok(report) => run.reports.push(report),
            Err(e @ (DetectError::Provider(_) | DetectError::InvalidParams(_))) => return Err(e),
            Err(e) => run.skipped.push(SkippedEvent { event_id, reason: e.to_string() }),
        }
    }
    Ok(run)
}
