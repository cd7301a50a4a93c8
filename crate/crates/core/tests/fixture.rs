mod common;

use std::collections::{BTreeMap, BTreeSet};

use cherry_core::detect::{detect_all, outlet_scores, DetectParams};
use cherry_core::model::validate_corpus;
use cherry_core::scoring::ContextSpec;
use cherry_core::textproc::HashedNgramProvider;
use common::synthetic;

#[test]
fn ingest_counts() {
    let (corpus, report) = synthetic::corpus();
    assert_eq!(
        (report.records, report.accepted, report.duplicates, report.out_of_window, report.unknown_outlet),
        (18, 15, 1, 1, 1)
    );
    assert_eq!(report.by_kind.get("opinion"), Some(&1));
    assert_eq!(corpus.articles.len(), 14);
    assert_eq!(corpus.statements.len(), 65 + 2);
    assert!(validate_corpus(&corpus).is_empty(), "{:?}", validate_corpus(&corpus));
}

#[test]
fn three_events_and_a_noise_article() {
    let (corpus, _) = synthetic::corpus();
    let mut sizes: Vec<usize> = corpus.events.iter().map(|e| e.article_ids.len()).collect();
    sizes.sort();
    assert_eq!(sizes, [4, 4, 5]);
    let headlines: BTreeSet<&str> = corpus.events.iter().map(|e| e.title.as_str()).collect();
    assert!(!headlines.iter().any(|h| h.contains("Library")));
}

#[test]
fn detect_flags_the_planted_omissions() {
    let (corpus, _) = synthetic::corpus();
    let run = detect_all(
        &corpus,
        &synthetic::scorer(),
        &ContextSpec::neutral(400),
        None,
        &HashedNgramProvider::default(),
        &DetectParams::default(),
    )
    .unwrap();
    assert!(run.skipped.is_empty());
    let by_url: BTreeMap<&str, BTreeSet<&str>> = run
        .reports
        .iter()
        .flat_map(|r| &r.documents)
        .map(|d| {
            let url = corpus.articles.iter().find(|a| a.id == d.article_id).unwrap().url.as_str();
            (url, d.cherry_picked.iter().map(|c| c.text.as_str()).collect())
        })
        .collect();
    let expected = synthetic::expected();
    assert_eq!(by_url.len(), expected.documents.len());
    for d in &expected.documents {
        let want: BTreeSet<&str> = d.cherry_picked.iter().map(String::as_str).collect();
        assert_eq!(by_url[d.url.as_str()], want, "{}", d.url);
    }
    let means: BTreeMap<String, f64> = outlet_scores(&run.reports).into_iter().map(|s| (s.outlet_id, s.mean)).collect();
    assert_eq!(means, expected.outlet_means);
}
