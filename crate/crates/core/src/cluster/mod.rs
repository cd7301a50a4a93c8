//! Density clustering of articles into events and of statements into
//! groups of equivalent claims.

mod dbscan;

use std::collections::HashSet;

use thiserror::Error;

pub use dbscan::{
    dbscan, dbscan_from_neighbors, dbscan_with, ClusterAssignment, DbscanParams, NeighborSearch, EXACT_NEIGHBOR_LIMIT,
};

use crate::model::{Article, Corpus, Event, Statement, StatementCluster, TimeWindow};
use crate::textproc::{article_vector_text, fit_tfidf, vectorize_batch, EmbeddingProvider, ProviderError, TextError};

/// Statements shorter than this are left out of statement clustering.
pub const MIN_STATEMENT_WORDS: u32 = 4;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("invalid clustering parameters: {0}")]
    InvalidParams(String),
    #[error("vector dimensions differ: expected {expected:?}, got {got:?}")]
    Dimension { expected: (usize, usize), got: (usize, usize) },
    #[error("need at least 2 articles, got {0}")]
    TooFewArticles(usize),
    #[error("unknown event {0}")]
    UnknownEvent(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Text(#[from] TextError),
}

/// Groups articles into events. Articles are ordered by id before
/// clustering; noise articles belong to no event.
pub fn cluster_articles(
    articles: &[Article],
    provider: &dyn EmbeddingProvider,
    params: &DbscanParams,
) -> Result<Vec<Event>, ClusterError> {
    params.validate()?;
    if articles.len() < 2 {
        return Err(ClusterError::TooFewArticles(articles.len()));
    }
    let mut sorted: Vec<&Article> = articles.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let texts: Vec<String> = sorted.iter().map(|a| article_vector_text(a)).collect();
    let tfidf = fit_tfidf(&texts)?;
    let vectors = vectorize_batch(&texts, &tfidf, provider)?;
    let assignment = dbscan(&vectors, params)?;

    let events = assignment
        .members()
        .into_iter()
        .map(|members| {
            let arts: Vec<&Article> = members.iter().map(|&i| sorted[i]).collect();
            let article_ids: Vec<String> = arts.iter().map(|a| a.id.clone()).collect();
            let first = arts.iter().min_by(|a, b| (a.published_at, &a.id).cmp(&(b.published_at, &b.id))).unwrap();
            let start = arts.iter().map(|a| a.published_at).min().unwrap();
            let end = arts.iter().map(|a| a.published_at).max().unwrap();
            Event {
                id: Event::derive_id(&article_ids),
                title: first.headline.clone(),
                article_ids,
                window: TimeWindow { start, end },
            }
        })
        .collect();
    Ok(events)
}

/// Clusters the statements of one event. Multi-member clusters come first in
/// label order, then one singleton-noise pseudo-cluster per noise statement.
pub fn cluster_statements(
    event: &Event,
    corpus: &Corpus,
    provider: &dyn EmbeddingProvider,
    params: &DbscanParams,
) -> Result<Vec<StatementCluster>, ClusterError> {
    params.validate()?;
    let index = corpus.index();
    let mut statements: Vec<&Statement> = event
        .article_ids
        .iter()
        .flat_map(|a| index.statements_of(a).iter().copied())
        .filter(|s| s.word_count >= MIN_STATEMENT_WORDS)
        .collect();
    statements.sort_by(|a, b| a.id.cmp(&b.id));
    if statements.is_empty() {
        return Ok(Vec::new());
    }
    let texts: Vec<&str> = statements.iter().map(|s| s.text.as_str()).collect();
    let tfidf = fit_tfidf(&texts)?;
    let vectors = vectorize_batch(&texts, &tfidf, provider)?;
    let assignment = dbscan(&vectors, params)?;

    // Earliest-published article first, then lowest ordinal.
    let rank = |s: &Statement| {
        let published = index.articles.get(s.article_id.as_str()).map(|a| a.published_at);
        (published, s.article_id.clone(), s.ordinal)
    };
    let build = |members: Vec<&Statement>, singleton_noise: bool| {
        let statement_ids: Vec<String> = members.iter().map(|s| s.id.clone()).collect();
        let representative = members.iter().min_by_key(|s| rank(s)).unwrap();
        StatementCluster {
            id: StatementCluster::derive_id(&event.id, &statement_ids),
            event_id: event.id.clone(),
            representative_id: representative.id.clone(),
            statement_ids,
            singleton_noise,
        }
    };
    let mut out: Vec<StatementCluster> = assignment
        .members()
        .into_iter()
        .map(|m| build(m.into_iter().map(|i| statements[i]).collect(), false))
        .collect();
    out.extend(assignment.noise().into_iter().map(|i| build(vec![statements[i]], true)));
    Ok(out)
}

/// Runs [`cluster_statements`] over every event in the corpus.
pub fn cluster_all_statements(
    corpus: &Corpus,
    provider: &dyn EmbeddingProvider,
    params: &DbscanParams,
) -> Result<Vec<StatementCluster>, ClusterError> {
    let mut out = Vec::new();
    for event in &corpus.events {
        out.extend(cluster_statements(event, corpus, provider, params)?);
    }
    Ok(out)
}

/// Keeps the events named in an allow-list. Unknown ids are reported.
pub fn curate_events(events: Vec<Event>, allow: &HashSet<String>) -> Result<Vec<Event>, ClusterError> {
    let known: HashSet<&str> = events.iter().map(|e| e.id.as_str()).collect();
    if let Some(missing) = allow.iter().find(|id| !known.contains(id.as_str())) {
        return Err(ClusterError::UnknownEvent(missing.clone()));
    }
    Ok(events.into_iter().filter(|e| allow.contains(&e.id)).collect())
}
