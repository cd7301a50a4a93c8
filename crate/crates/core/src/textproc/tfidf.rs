use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{SparseVector, TextError};

/// Lowercase alphanumeric word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Fitted vocabulary and smoothed idf table. Immutable after fitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TfidfState {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    documents: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

/// Fits `idf(t) = ln((1 + N) / (1 + df(t))) + 1` over lowercase word tokens.
/// The vocabulary is sorted so indices do not depend on document order.
pub fn fit_tfidf<S: AsRef<str>>(documents: &[S]) -> Result<TfidfState, TextError> {
    if documents.is_empty() {
        return Err(TextError::NoDocuments);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in documents {
        let terms: BTreeSet<String> = tokenize(doc.as_ref()).into_iter().collect();
        for t in terms {
            *df.entry(t).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(TextError::EmptyVocabulary);
    }
    let n = documents.len() as f64;
    let (vocabulary, idf): (Vec<String>, Vec<f64>) =
        df.into_iter().map(|(t, d)| { let w = ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0; (t, w) }).unzip();
    Ok(TfidfState::from_parts(vocabulary, idf, documents.len()))
}

impl PartialEq for TfidfState {
    fn eq(&self, other: &Self) -> bool {
        self.vocabulary == other.vocabulary && self.idf == other.idf && self.documents == other.documents
    }
}

impl TfidfState {
    fn from_parts(vocabulary: Vec<String>, idf: Vec<f64>, documents: usize) -> Self {
        let index = vocabulary.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { vocabulary, idf, documents, index }
    }

    /// No vocabulary: every text transforms to an empty zero vector.
    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new(), 0)
    }

    pub fn dimension(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.lookup(term).map(|i| self.idf[i as usize])
    }

    fn lookup(&self, term: &str) -> Option<u32> {
        if self.index.is_empty() && !self.vocabulary.is_empty() {
            // Deserialized state: index was skipped.
            return self.vocabulary.binary_search_by(|t| t.as_str().cmp(term)).ok().map(|i| i as u32);
        }
        self.index.get(term).copied()
    }

    /// Raw term frequency times idf, L2-normalized. Unknown tokens are ignored.
    pub fn transform(&self, text: &str) -> SparseVector {
        let pairs = tokenize(text).into_iter().filter_map(|t| {
            let i = self.lookup(&t)?;
            Some((i, self.idf[i as usize]))
        });
        SparseVector::from_pairs(self.dimension(), pairs).normalized()
    }
}
