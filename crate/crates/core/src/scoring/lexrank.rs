//! Graph centrality over context sentences, transferred to event statements
//! through their most similar context sentence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ImportanceScore, ImportanceScorer, ScoringError};
use crate::textproc::{fit_tfidf, split_sentences, SparseVector, TextError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexRankParams {
    pub similarity_threshold: f64,
    /// Teleport probability of the random walk.
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Number of statements marked important.
    pub summary_size: usize,
}

impl Default for LexRankParams {
    fn default() -> Self {
        Self { similarity_threshold: 0.1, damping: 0.15, tolerance: 1e-8, max_iterations: 1000, summary_size: 5 }
    }
}

impl LexRankParams {
    pub fn with_summary_size(mut self, k: usize) -> Self {
        self.summary_size = k;
        self
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        let bad = |m: String| Err(ScoringError::InvalidSpec(m));
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return bad(format!("similarity threshold {} outside [0, 1]", self.similarity_threshold));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return bad(format!("damping {} outside (0, 1)", self.damping));
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive".into());
        }
        Ok(())
    }
}

pub fn context_sentences(context: &str) -> Vec<String> {
    split_sentences(context)
}

fn sparse_vectors(sentences: &[String]) -> Vec<SparseVector> {
    match fit_tfidf(sentences) {
        Ok(tfidf) => sentences.iter().map(|s| tfidf.transform(s)).collect(),
        // No word tokens anywhere: every sentence is a zero vector.
        Err(TextError::EmptyVocabulary | TextError::NoDocuments) => {
            sentences.iter().map(|_| SparseVector::zeros(0)).collect()
        }
        Err(e) => unreachable!("{e}"),
    }
}

/// Stationary distribution of `d/N + (1-d) B`, where `B` is the
/// row-normalized thresholded similarity graph (self-loops included).
/// Rows without edges are spread uniformly.
pub fn lexrank_centrality(sentences: &[String], params: &LexRankParams) -> Result<Vec<f64>, ScoringError> {
    params.validate()?;
    let n = sentences.len();
    if n == 0 {
        return Err(ScoringError::EmptyContext);
    }
    let vectors = sparse_vectors(sentences);
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| vectors[i].dot(&vectors[j]) >= params.similarity_threshold && !vectors[i].is_zero() && !vectors[j].is_zero()).collect())
        .collect();
    power_iteration(&rows, params)
}

fn power_iteration(rows: &[Vec<usize>], params: &LexRankParams) -> Result<Vec<f64>, ScoringError> {
    let n = rows.len();
    let uniform = 1.0 / n as f64;
    let d = params.damping;
    let mut p = vec![uniform; n];
    for _ in 0..params.max_iterations {
        // next_j = sum_i p_i M_ij
        let mut next = vec![0.0; n];
        let mut spread = 0.0;
        for (i, row) in rows.iter().enumerate() {
            if row.is_empty() {
                spread += p[i];
            } else {
                let w = p[i] / row.len() as f64;
                for &j in row {
                    next[j] += w;
                }
            }
        }
        let base = d * uniform + (1.0 - d) * spread * uniform;
        for x in next.iter_mut() {
            *x = base + (1.0 - d) * *x;
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let delta: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = next;
        if delta < params.tolerance {
            return Ok(p);
        }
    }
    Err(ScoringError::NotConverged { iterations: params.max_iterations })
}

/// Cut for the top `k` scores: the `k`-th largest, but never below the
/// smallest positive score, so zero scores are never selected. With `k = 0`
/// or no positive score the cut lies above every probability.
pub fn top_k_threshold(scores: &[f64], k: usize) -> f64 {
    let mut positive: Vec<f64> = scores.iter().copied().filter(|&s| s > 0.0).collect();
    if k == 0 || positive.is_empty() {
        return 1.0 + f64::EPSILON;
    }
    positive.sort_by(|a, b| b.total_cmp(a));
    positive[k.min(positive.len()) - 1]
}

pub fn lexrank_score(
    event_statements: &[&str],
    context: &str,
    params: &LexRankParams,
) -> Result<Vec<ImportanceScore>, ScoringError> {
    let sentences = context_sentences(context);
    let centrality = lexrank_centrality(&sentences, params)?;
    let raw: Vec<f64> = match fit_tfidf(&sentences) {
        Ok(tfidf) => {
            let ctx: Vec<SparseVector> = sentences.iter().map(|s| tfidf.transform(s)).collect();
            event_statements
                .iter()
                .map(|s| {
                    let v = tfidf.transform(s);
                    let (best, sim) = ctx
                        .iter()
                        .enumerate()
                        .map(|(j, c)| (j, v.dot(c)))
                        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                    if v.is_zero() || sim < params.similarity_threshold { 0.0 } else { centrality[best] }
                })
                .collect()
        }
        Err(_) => vec![0.0; event_statements.len()],
    };
    let cut = top_k_threshold(&raw, params.summary_size);
    Ok(raw.into_iter().map(|p| ImportanceScore::new(p, cut)).collect())
}

/// [`lexrank_score`] behind the scorer interface. Pairs are grouped by
/// context and the top-k cut applies within each group.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexRankScorer {
    pub params: LexRankParams,
}

impl ImportanceScorer for LexRankScorer {
    fn name(&self) -> &str {
        "lexrank"
    }

    fn score(&self, statement: &str, context: &str) -> Result<ImportanceScore, ScoringError> {
        Ok(lexrank_score(&[statement], context, &self.params)?.remove(0))
    }

    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<ImportanceScore>, ScoringError> {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, (_, c)) in pairs.iter().enumerate() {
            groups.entry(c).or_default().push(i);
        }
        let mut out = vec![ImportanceScore::new(0.0, 1.0); pairs.len()];
        for (context, idx) in groups {
            let statements: Vec<&str> = idx.iter().map(|&i| pairs[i].0).collect();
            for (i, s) in idx.into_iter().zip(lexrank_score(&statements, context, &self.params)?) {
                out[i] = s;
            }
        }
        Ok(out)
    }
}
