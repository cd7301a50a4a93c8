use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{normalize_whitespace, ArticleKind, Corpus, MIN_EVENT_SIZE};

/// One broken invariant, attributed to the record that broke it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub record: String,
    pub message: String,
}

impl Violation {
    fn new(kind: &str, id: &str, message: impl Into<String>) -> Self {
        Self { record: format!("{kind}:{id}"), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.record, self.message)
    }
}

/// Checks every type invariant and referential link. An empty result means
/// the corpus is well formed.
pub fn validate_corpus(corpus: &Corpus) -> Vec<Violation> {
    let mut out = Vec::new();

    let outlet_ids = unique_ids(&mut out, "outlet", corpus.outlets.iter().map(|o| o.id.as_str()));
    let article_ids = unique_ids(&mut out, "article", corpus.articles.iter().map(|a| a.id.as_str()));
    let statement_ids = unique_ids(&mut out, "statement", corpus.statements.iter().map(|s| s.id.as_str()));
    let event_ids = unique_ids(&mut out, "event", corpus.events.iter().map(|e| e.id.as_str()));
    unique_ids(&mut out, "cluster", corpus.clusters.iter().map(|c| c.id.as_str()));

    for o in &corpus.outlets {
        if o.bias_ratings.is_empty() {
            out.push(Violation::new("outlet", &o.id, "no bias rating from any rater"));
        }
        for (rater, score) in &o.bias_ratings {
            if !(-2..=2).contains(score) {
                out.push(Violation::new("outlet", &o.id, format!("{rater} score {score} outside -2..=2")));
            }
        }
    }

    for a in &corpus.articles {
        if !outlet_ids.contains(a.outlet_id.as_str()) {
            out.push(Violation::new("article", &a.id, format!("dangling outlet reference {}", a.outlet_id)));
        }
        if a.kind == ArticleKind::News && a.body.trim().is_empty() {
            out.push(Violation::new("article", &a.id, "news article with empty body"));
        }
        if let Some(window) = &corpus.collection_window {
            if !window.contains(a.published_at) {
                out.push(Violation::new("article", &a.id, "published outside the collection window"));
            }
        }
    }

    let mut by_article: BTreeMap<&str, Vec<&super::Statement>> = BTreeMap::new();
    for s in &corpus.statements {
        if !article_ids.contains(s.article_id.as_str()) {
            out.push(Violation::new("statement", &s.id, format!("dangling article reference {}", s.article_id)));
        }
        if s.word_count < 1 {
            out.push(Violation::new("statement", &s.id, "word_count below 1"));
        }
        by_article.entry(s.article_id.as_str()).or_default().push(s);
    }
    let articles: HashMap<&str, &super::Article> = corpus.articles.iter().map(|a| (a.id.as_str(), a)).collect();
    for (article_id, mut list) in by_article {
        list.sort_by_key(|s| s.ordinal);
        let contiguous = list.iter().enumerate().all(|(i, s)| s.ordinal as usize == i);
        if !contiguous {
            out.push(Violation::new("article", article_id, "statement ordinals not contiguous from 0"));
            continue;
        }
        if let Some(article) = articles.get(article_id) {
            let joined = list.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
            if normalize_whitespace(&joined) != normalize_whitespace(&article.body) {
                out.push(Violation::new("article", article_id, "statements do not reconstruct the body"));
            }
        }
    }

    let mut event_members: HashMap<&str, HashSet<&str>> = HashMap::new();
    for e in &corpus.events {
        if e.article_ids.len() < MIN_EVENT_SIZE {
            out.push(Violation::new("event", &e.id, format!("event below min size {MIN_EVENT_SIZE}")));
        }
        if e.window.start > e.window.end {
            out.push(Violation::new("event", &e.id, "window start after end"));
        }
        for id in &e.article_ids {
            match articles.get(id.as_str()) {
                None => out.push(Violation::new("event", &e.id, format!("dangling article reference {id}"))),
                Some(a) if !e.window.contains(a.published_at) => {
                    out.push(Violation::new("event", &e.id, format!("article {id} outside event window")))
                }
                Some(_) => {}
            }
        }
        event_members.insert(e.id.as_str(), e.article_ids.iter().map(String::as_str).collect());
    }

    let statements: HashMap<&str, &super::Statement> =
        corpus.statements.iter().map(|s| (s.id.as_str(), s)).collect();
    for c in &corpus.clusters {
        if !event_ids.contains(c.event_id.as_str()) {
            out.push(Violation::new("cluster", &c.id, format!("dangling event reference {}", c.event_id)));
        }
        let members = event_members.get(c.event_id.as_str());
        for sid in &c.statement_ids {
            if !statement_ids.contains(sid.as_str()) {
                out.push(Violation::new("cluster", &c.id, format!("dangling statement reference {sid}")));
                continue;
            }
            let article = statements[sid.as_str()].article_id.as_str();
            if members.is_some_and(|m| !m.contains(article)) {
                out.push(Violation::new("cluster", &c.id, format!("statement {sid} is not from an event article")));
            }
        }
        if !c.statement_ids.contains(&c.representative_id) {
            out.push(Violation::new("cluster", &c.id, "representative is not a member"));
        }
        match (c.statement_ids.len(), c.singleton_noise) {
            (0, _) => out.push(Violation::new("cluster", &c.id, "empty cluster")),
            (1, false) => out.push(Violation::new("cluster", &c.id, "single-member cluster not marked singleton-noise")),
            (n, true) if n > 1 => out.push(Violation::new("cluster", &c.id, "singleton-noise flag on multi-member cluster")),
            _ => {}
        }
    }

    out
}

fn unique_ids<'a>(out: &mut Vec<Violation>, kind: &str, ids: impl Iterator<Item = &'a str>) -> HashSet<&'a str> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            out.push(Violation::new(kind, id, "duplicate id"));
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::model::BiasCategory;

    #[test]
    fn well_formed_fixture_has_no_violations() {
        assert_eq!(validate_corpus(&small_corpus()), vec![]);
    }

    #[test]
    fn single_article_event_is_flagged() {
        let mut c = small_corpus();
        c.clusters.clear();
        c.events[0].article_ids.truncate(1);
        let v = validate_corpus(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].message, "event below min size 2");
    }

    #[test]
    fn ordinal_gap_is_flagged() {
        let mut c = small_corpus();
        c.statements[1].ordinal = 2;
        let v = validate_corpus(&c);
        assert!(v.iter().any(|v| v.message.contains("not contiguous")), "{v:?}");
    }

    #[test]
    fn statements_must_reconstruct_body() {
        let mut c = small_corpus();
        c.statements[1].text = "Critics cheered.".into();
        let v = validate_corpus(&c);
        assert!(v.iter().any(|v| v.message.contains("reconstruct")));
    }

    #[test]
    fn outlet_needs_a_rating_in_range() {
        let mut c = small_corpus();
        c.outlets[0].bias_ratings.clear();
        c.outlets[1] = outlet("beta", BiasCategory::Center);
        c.outlets[1].bias_ratings.insert(crate::model::Rater::AllSides, 5);
        let v = validate_corpus(&c);
        assert_eq!(v.len(), 2, "{v:?}");
    }

    #[test]
    fn cluster_rules() {
        let mut c = small_corpus();
        c.clusters[0].representative_id = "nope".into();
        c.clusters[0].statement_ids.truncate(1);
        let v = validate_corpus(&c);
        assert!(v.iter().any(|v| v.message == "representative is not a member"));
        assert!(v.iter().any(|v| v.message.contains("not marked singleton-noise")));
    }

    #[test]
    fn cluster_member_outside_event() {
        let mut c = small_corpus();
        let foreign = c.statements.last().unwrap().id.clone();
        c.clusters[0].statement_ids.push(foreign);
        let v = validate_corpus(&c);
        assert!(v.iter().any(|v| v.message.contains("not from an event article")));
    }

    #[test]
    fn article_outside_window_and_dangling_outlet() {
        let mut c = small_corpus();
        c.articles[2].published_at = ts(1, 0) - chrono::Duration::days(40);
        c.articles[2].outlet_id = "ghost".into();
        let v = validate_corpus(&c);
        assert_eq!(v.len(), 2, "{v:?}");
    }
}
