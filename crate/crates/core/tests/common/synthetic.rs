//! The bundled three-event corpus under `fixtures/synthetic`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use cherry_core::cluster::{cluster_all_statements, cluster_articles, DbscanParams};
use cherry_core::ingest::{fetch_articles, filter_news_only, FetchReport, FetchSpec, SourceRegistry};
use cherry_core::model::Corpus;
use cherry_core::scoring::LookupScorer;
use cherry_core::textproc::{segment_statements, HashedNgramProvider};
use serde::Deserialize;

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic")
}

#[derive(Debug, Deserialize)]
pub struct ExpectedDocument {
    pub url: String,
    pub outlet_id: String,
    pub cherry_picked: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct Expected {
    pub documents: Vec<ExpectedDocument>,
    pub outlet_means: BTreeMap<String, f64>,
}

pub fn expected() -> Expected {
    serde_json::from_str(&std::fs::read_to_string(dir().join("expected.json")).unwrap()).unwrap()
}

pub fn important() -> Vec<String> {
    std::fs::read_to_string(dir().join("important.txt")).unwrap().lines().map(str::to_string).collect()
}

pub fn scorer() -> LookupScorer {
    LookupScorer::important(important())
}

/// Ingest, segment, and cluster both levels with the offline provider.
pub fn corpus() -> (Corpus, FetchReport) {
    let registry = SourceRegistry::load(&dir().join("registry.json")).unwrap();
    let fetched = fetch_articles(&registry, &FetchSpec::local(dir().join("articles"))).unwrap();
    let articles = filter_news_only(fetched.articles);
    let provider = HashedNgramProvider::default();
    let mut corpus = Corpus {
        collection_window: Some(registry.window),
        outlets: registry.outlets,
        statements: articles.iter().flat_map(segment_statements).collect(),
        events: cluster_articles(&articles, &provider, &DbscanParams::articles()).unwrap(),
        articles,
        clusters: Vec::new(),
    };
    corpus.clusters = cluster_all_statements(&corpus, &provider, &DbscanParams::statements()).unwrap();
    (corpus, fetched.report)
}
