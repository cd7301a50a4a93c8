//! Corpus domain types: outlets, articles, statements, events and statement
//! clusters, with invariant checking and a line-delimited on-disk store.

mod store;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use store::{load_corpus, save_corpus, save_corpus_with_stages, Manifest, RecordCounts};
pub use validate::{validate_corpus, Violation};

/// Minimum number of articles an event may hold.
pub const MIN_EVENT_SIZE: usize = 2;

/// A media bias rating source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rater {
    #[serde(rename = "MBFC")]
    Mbfc,
    AllSides,
    AdFontes,
}

impl Rater {
    pub const ALL: [Rater; 3] = [Rater::Mbfc, Rater::AllSides, Rater::AdFontes];

    pub fn as_str(self) -> &'static str {
        match self {
            Rater::Mbfc => "MBFC",
            Rater::AllSides => "AllSides",
            Rater::AdFontes => "AdFontes",
        }
    }
}

impl fmt::Display for Rater {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Rater {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace([' ', '_', '-'], "").as_str() {
            "mbfc" | "mediabiasfactcheck" => Ok(Rater::Mbfc),
            "allsides" => Ok(Rater::AllSides),
            "adfontes" | "adfontesmedia" => Ok(Rater::AdFontes),
            other => Err(format!("unknown rater `{other}`")),
        }
    }
}

/// Ordinal political bias band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BiasCategory {
    Left,
    LeftCenter,
    Center,
    RightCenter,
    Right,
}

impl BiasCategory {
    pub const ALL: [BiasCategory; 5] = [
        BiasCategory::Left,
        BiasCategory::LeftCenter,
        BiasCategory::Center,
        BiasCategory::RightCenter,
        BiasCategory::Right,
    ];

    /// Symmetric integer scale, Left = -2 through Right = +2.
    pub fn ordinal(self) -> i8 {
        match self {
            BiasCategory::Left => -2,
            BiasCategory::LeftCenter => -1,
            BiasCategory::Center => 0,
            BiasCategory::RightCenter => 1,
            BiasCategory::Right => 2,
        }
    }

    pub fn from_ordinal(score: i8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.ordinal() == score)
    }

    /// Human-readable band name as used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            BiasCategory::Left => "Left",
            BiasCategory::LeftCenter => "Left center",
            BiasCategory::Center => "Center",
            BiasCategory::RightCenter => "Right center",
            BiasCategory::Right => "Right",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outlet {
    pub id: String,
    pub name: String,
    pub domain: String,
    pub bias_category: BiasCategory,
    /// Ordinal score per rater on the -2..=2 scale.
    #[serde(default)]
    pub bias_ratings: BTreeMap<Rater, i8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArticleKind {
    News,
    Opinion,
    Editorial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub outlet_id: String,
    pub url: String,
    pub headline: String,
    pub body: String,
    pub published_at: DateTime<Utc>,
    pub kind: ArticleKind,
}

impl Article {
    /// Content-derived article id: stable across re-ingestion of the same URL.
    pub fn derive_id(outlet_id: &str, url: &str) -> String {
        content_id("art", &[outlet_id, url])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub id: String,
    pub article_id: String,
    pub ordinal: u32,
    pub text: String,
    pub word_count: u32,
}

impl Statement {
    pub fn derive_id(article_id: &str, ordinal: u32) -> String {
        format!("{article_id}-s{ordinal:04}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeWindow {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub title: String,
    /// Sorted, duplicate-free.
    pub article_ids: Vec<String>,
    pub window: TimeWindow,
}

impl Event {
    /// Event id derived from its (sorted) member set.
    pub fn derive_id(article_ids: &[String]) -> String {
        let parts: Vec<&str> = article_ids.iter().map(String::as_str).collect();
        content_id("ev", &parts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementCluster {
    pub id: String,
    pub event_id: String,
    pub statement_ids: Vec<String>,
    pub representative_id: String,
    /// Set for one-member pseudo-clusters that DBSCAN labelled as noise.
    #[serde(default)]
    pub singleton_noise: bool,
}

impl StatementCluster {
    pub fn derive_id(event_id: &str, statement_ids: &[String]) -> String {
        let mut parts: Vec<&str> = vec![event_id];
        parts.extend(statement_ids.iter().map(String::as_str));
        content_id("cl", &parts)
    }
}

/// All statements of all documents of one event, deduplicated by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalStatementSet {
    pub event_id: String,
    pub statement_ids: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    #[serde(default)]
    pub collection_window: Option<TimeWindow>,
    pub outlets: Vec<Outlet>,
    pub articles: Vec<Article>,
    pub statements: Vec<Statement>,
    pub events: Vec<Event>,
    pub clusters: Vec<StatementCluster>,
}

impl Corpus {
    pub fn index(&self) -> CorpusIndex<'_> {
        CorpusIndex::new(self)
    }

    pub fn universal_statement_set(&self, event: &Event) -> UniversalStatementSet {
        let index = self.index();
        let mut seen = std::collections::HashSet::new();
        let statement_ids = event
            .article_ids
            .iter()
            .flat_map(|a| index.statements_of(a))
            .filter(|s| seen.insert(s.id.as_str()))
            .map(|s| s.id.clone())
            .collect();
        UniversalStatementSet { event_id: event.id.clone(), statement_ids }
    }
}

/// Borrowed lookup tables over a corpus.
pub struct CorpusIndex<'a> {
    pub outlets: HashMap<&'a str, &'a Outlet>,
    pub articles: HashMap<&'a str, &'a Article>,
    pub statements: HashMap<&'a str, &'a Statement>,
    pub events: HashMap<&'a str, &'a Event>,
    by_article: HashMap<&'a str, Vec<&'a Statement>>,
}

impl<'a> CorpusIndex<'a> {
    fn new(corpus: &'a Corpus) -> Self {
        let mut by_article: HashMap<&str, Vec<&Statement>> = HashMap::new();
        for s in &corpus.statements {
            by_article.entry(s.article_id.as_str()).or_default().push(s);
        }
        for list in by_article.values_mut() {
            list.sort_by_key(|s| s.ordinal);
        }
        Self {
            outlets: corpus.outlets.iter().map(|o| (o.id.as_str(), o)).collect(),
            articles: corpus.articles.iter().map(|a| (a.id.as_str(), a)).collect(),
            statements: corpus.statements.iter().map(|s| (s.id.as_str(), s)).collect(),
            events: corpus.events.iter().map(|e| (e.id.as_str(), e)).collect(),
            by_article,
        }
    }

    /// Statements of an article in ordinal order.
    pub fn statements_of(&self, article_id: &str) -> &[&'a Statement] {
        self.by_article.get(article_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn outlet_of(&self, article_id: &str) -> Option<&'a Outlet> {
        let article = self.articles.get(article_id)?;
        self.outlets.get(article.outlet_id.as_str()).copied()
    }
}

/// Collapses every whitespace run to a single space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub(crate) fn content_id(prefix: &str, parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    format!("{prefix}-{}", hex::encode(&digest[..8]))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use chrono::TimeZone;

    pub fn ts(day: u32, hour: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 6, day, hour, 0, 0).unwrap()
    }

    pub fn outlet(id: &str, bias: BiasCategory) -> Outlet {
        Outlet {
            id: id.to_string(),
            name: format!("{id} News"),
            domain: format!("{id}.example.com"),
            bias_category: bias,
            bias_ratings: BTreeMap::from([(Rater::Mbfc, bias.ordinal())]),
        }
    }

    pub fn article(outlet_id: &str, slug: &str, day: u32, sentences: &[&str]) -> (Article, Vec<Statement>) {
        let url = format!("https://{outlet_id}.example.com/{slug}");
        let id = Article::derive_id(outlet_id, &url);
        let statements = sentences
            .iter()
            .enumerate()
            .map(|(i, text)| Statement {
                id: Statement::derive_id(&id, i as u32),
                article_id: id.clone(),
                ordinal: i as u32,
                text: text.to_string(),
                word_count: text.split_whitespace().count() as u32,
            })
            .collect();
        let article = Article {
            id,
            outlet_id: outlet_id.to_string(),
            url,
            headline: format!("Headline {slug}"),
            body: sentences.join(" "),
            published_at: ts(day, 12),
            kind: ArticleKind::News,
        };
        (article, statements)
    }

    /// Two outlets, three articles, one event over the first two.
    pub fn small_corpus() -> Corpus {
        let (a1, s1) = article("alpha", "one", 2, &["The vote passed late Monday.", "Critics objected."]);
        let (a2, s2) = article("beta", "two", 3, &["The vote passed late Monday."]);
        let (a3, s3) = article("beta", "three", 4, &["Unrelated weather story today."]);
        let mut ids = vec![a1.id.clone(), a2.id.clone()];
        ids.sort();
        let event = Event {
            id: Event::derive_id(&ids),
            title: a1.headline.clone(),
            article_ids: ids,
            window: TimeWindow { start: a1.published_at, end: a2.published_at },
        };
        let members = vec![s1[0].id.clone(), s2[0].id.clone()];
        let cluster = StatementCluster {
            id: StatementCluster::derive_id(&event.id, &members),
            event_id: event.id.clone(),
            representative_id: s1[0].id.clone(),
            statement_ids: members,
            singleton_noise: false,
        };
        Corpus {
            collection_window: Some(TimeWindow { start: ts(1, 0), end: ts(30, 0) }),
            outlets: vec![outlet("alpha", BiasCategory::Left), outlet("beta", BiasCategory::Center)],
            articles: vec![a1, a2, a3],
            statements: [s1, s2, s3].concat(),
            events: vec![event],
            clusters: vec![cluster],
        }
    }
}
