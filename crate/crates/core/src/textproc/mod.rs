//! Text representations: sentence segmentation, TF-IDF, dense embeddings and
//! hybrid (dense + sparse) vectors with their cosine similarity.

mod embed;
mod segment;
mod tfidf;
mod vector;

use thiserror::Error;

pub use embed::{EmbeddingProvider, HashedNgramProvider, RemoteEmbeddingConfig, RemoteEmbeddingProvider};
pub use segment::{segment_statements, segment_with, split_sentences, SentenceSplitter};
pub use tfidf::{fit_tfidf, tokenize, TfidfState};
pub use vector::{cosine, weighted_cosine, DenseVector, HybridVector, SparseVector};

use crate::http::HttpError;
use crate::model::Article;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TextError {
    #[error("no documents to fit")]
    NoDocuments,
    #[error("empty vocabulary")]
    EmptyVocabulary,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    #[error("embedding provider unreachable: {0}")]
    Http(#[from] HttpError),
    #[error("embedding provider protocol error: {0}")]
    Protocol(String),
    #[error("embedding dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Hybrid vector of `text`: the provider's embedding and the TF-IDF weights,
/// each unit-normalized. Empty text gives two zero blocks without calling the
/// provider.
pub fn vectorize_hybrid(
    text: &str,
    tfidf: &TfidfState,
    provider: &dyn EmbeddingProvider,
) -> Result<HybridVector, ProviderError> {
    if text.trim().is_empty() {
        return Ok(HybridVector {
            dense: DenseVector::zeros(provider.dimension()),
            sparse: SparseVector::zeros(tfidf.dimension()),
        });
    }
    let raw = provider.embed(text)?;
    assemble(raw, text, tfidf, provider.dimension())
}

/// Batch form of [`vectorize_hybrid`]; output order follows input order.
pub fn vectorize_batch<S: AsRef<str>>(
    texts: &[S],
    tfidf: &TfidfState,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<HybridVector>, ProviderError> {
    let non_empty: Vec<&str> = texts.iter().map(AsRef::as_ref).filter(|t| !t.trim().is_empty()).collect();
    let mut embedded = provider.embed_batch(&non_empty)?.into_iter();
    texts
        .iter()
        .map(|t| {
            let t = t.as_ref();
            if t.trim().is_empty() {
                Ok(HybridVector {
                    dense: DenseVector::zeros(provider.dimension()),
                    sparse: SparseVector::zeros(tfidf.dimension()),
                })
            } else {
                let raw = embedded.next().ok_or_else(|| ProviderError::Protocol("short batch".into()))?;
                assemble(raw, t, tfidf, provider.dimension())
            }
        })
        .collect()
}

fn assemble(raw: Vec<f64>, text: &str, tfidf: &TfidfState, dimension: usize) -> Result<HybridVector, ProviderError> {
    if raw.len() != dimension {
        return Err(ProviderError::Dimension { expected: dimension, got: raw.len() });
    }
    Ok(HybridVector { dense: DenseVector::new(raw).normalized(), sparse: tfidf.transform(text) })
}

/// Text up to the first blank line.
pub fn first_paragraph(body: &str) -> &str {
    let mut offset = 0;
    let mut seen_text = false;
    for line in body.split_inclusive('\n') {
        if line.trim().is_empty() {
            if seen_text {
                return body[..offset].trim();
            }
        } else {
            seen_text = true;
        }
        offset += line.len();
    }
    body.trim()
}

/// Input used to place an article in event space: headline and lead paragraph.
pub fn article_vector_text(article: &Article) -> String {
    format!("{}\n{}", article.headline, first_paragraph(&article.body))
}
