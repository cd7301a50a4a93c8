use std::collections::HashMap;
use std::sync::Mutex;

use cherry_core::dataset::ImportanceLabel;
use cherry_core::model::{Corpus, StatementCluster};
use cherry_core::scoring::context_article;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::redact::Redactor;
use crate::roster::{Roster, RosterEntry};
use crate::store::{VoteLog, VoteRecord};

pub const COMPLETION_MESSAGE: &str = "All clusters of this event are labeled. Enter a new event ID to continue.";

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("unknown event {0}")]
    UnknownEvent(String),
    #[error("unknown cluster {0}")]
    UnknownCluster(String),
    #[error("event {0} has no article from a Center outlet to show as context")]
    NoContext(String),
    #[error("label {0} is outside 1..=5")]
    InvalidLabel(i64),
    #[error("cluster {cluster} is not the current one for {annotator}; expected {expected}")]
    Stale { annotator: String, cluster: String, expected: String },
    #[error("missing or unknown bearer token")]
    Unauthorized,
    #[error("{0}")]
    Forbidden(String),
    #[error("invalid roster: {0}")]
    Roster(String),
    #[error("vote storage failed: {0}")]
    Storage(String),
    #[error("bad request: {0}")]
    BadRequest(String),
}

impl AnnotateError {
    pub fn code(&self) -> &'static str {
        match self {
            AnnotateError::UnknownEvent(_) => "unknown_event",
            AnnotateError::UnknownCluster(_) => "unknown_cluster",
            AnnotateError::NoContext(_) => "no_context",
            AnnotateError::InvalidLabel(_) => "invalid_label",
            AnnotateError::Stale { .. } => "stale_cluster",
            AnnotateError::Unauthorized => "unauthorized",
            AnnotateError::Forbidden(_) => "forbidden",
            AnnotateError::Roster(_) => "roster",
            AnnotateError::Storage(_) => "storage",
            AnnotateError::BadRequest(_) => "bad_request",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextPayload {
    pub headline: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementPayload {
    pub statement_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPayload {
    pub cluster_id: String,
    /// Position in the event's presentation order.
    pub index: usize,
    pub statements: Vec<StatementPayload>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub labeled: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextResponse {
    pub event_id: String,
    pub context: ContextPayload,
    /// Absent once every cluster is labeled.
    pub cluster: Option<ClusterPayload>,
    pub progress: Progress,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Precomputed, already redacted view of one event.
struct EventView {
    context: Option<ContextPayload>,
    clusters: Vec<ClusterPayload>,
}

pub struct Service {
    events: HashMap<String, EventView>,
    /// cluster id -> (event id, position)
    clusters: HashMap<String, (String, usize)>,
    roster: Roster,
    log: VoteLog,
    cursors: Mutex<HashMap<(String, String), usize>>,
}

impl Service {
    pub fn new(corpus: &Corpus, roster: Roster, log: VoteLog) -> Self {
        let redactor = Redactor::for_corpus(corpus);
        let index = corpus.index();
        let mut by_event: HashMap<&str, Vec<&StatementCluster>> = HashMap::new();
        for c in &corpus.clusters {
            by_event.entry(c.event_id.as_str()).or_default().push(c);
        }
        let mut events = HashMap::new();
        let mut clusters = HashMap::new();
        for event in &corpus.events {
            let mut list = by_event.remove(event.id.as_str()).unwrap_or_default();
            // Representative's publication time, then its ordinal.
            list.sort_by_cached_key(|c| {
                let rep = index.statements.get(c.representative_id.as_str());
                let published = rep.and_then(|s| index.articles.get(s.article_id.as_str())).map(|a| a.published_at);
                (published, rep.map(|s| s.ordinal), c.id.clone())
            });
            let payloads: Vec<ClusterPayload> = list
                .iter()
                .enumerate()
                .map(|(i, c)| ClusterPayload {
                    cluster_id: c.id.clone(),
                    index: i,
                    statements: c
                        .statement_ids
                        .iter()
                        .filter_map(|id| index.statements.get(id.as_str()))
                        .map(|s| StatementPayload { statement_id: s.id.clone(), text: redactor.apply(&s.text) })
                        .collect(),
                })
                .collect();
            for p in &payloads {
                clusters.insert(p.cluster_id.clone(), (event.id.clone(), p.index));
            }
            let context = context_article(event, corpus)
                .map(|a| ContextPayload { headline: redactor.apply(&a.headline), text: redactor.apply(&a.body) });
            events.insert(event.id.clone(), EventView { context, clusters: payloads });
        }
        Self { events, clusters, roster, log, cursors: Mutex::new(HashMap::new()) }
    }

    pub fn authenticate(&self, token: Option<&str>) -> Result<&RosterEntry, AnnotateError> {
        token.and_then(|t| self.roster.authenticate(t)).ok_or(AnnotateError::Unauthorized)
    }

    fn authorize<'a>(&'a self, token: Option<&str>, annotator: &str) -> Result<&'a RosterEntry, AnnotateError> {
        let who = self.authenticate(token)?;
        if who.annotator != annotator {
            return Err(AnnotateError::Forbidden(format!("token does not belong to {annotator}")));
        }
        Ok(who)
    }

    fn view(&self, event_id: &str) -> Result<&EventView, AnnotateError> {
        self.events.get(event_id).ok_or_else(|| AnnotateError::UnknownEvent(event_id.to_string()))
    }

    /// First cluster at or after `from` that the annotator has not labeled.
    fn next_unlabeled(view: &EventView, labeled: &HashMap<String, ImportanceLabel>, from: usize) -> usize {
        (from..view.clusters.len()).find(|&i| !labeled.contains_key(&view.clusters[i].cluster_id)).unwrap_or(view.clusters.len())
    }

    fn respond(&self, event_id: &str, view: &EventView, cursor: usize, labeled: &HashMap<String, ImportanceLabel>) -> NextResponse {
        let done = view.clusters.iter().filter(|c| labeled.contains_key(&c.cluster_id)).count();
        let cluster = view.clusters.get(cursor).cloned();
        let complete = cluster.is_none();
        NextResponse {
            event_id: event_id.to_string(),
            context: view.context.clone().expect("checked by caller"),
            cluster,
            progress: Progress { labeled: done, total: view.clusters.len() },
            complete,
            message: complete.then(|| COMPLETION_MESSAGE.to_string()),
        }
    }

    /// Opens (or resumes) the annotator's session on an event.
    pub fn open_event(&self, token: Option<&str>, annotator: &str, event_id: &str) -> Result<NextResponse, AnnotateError> {
        let who = self.authorize(token, annotator)?;
        let view = self.view(event_id)?;
        if !who.may_open(event_id) {
            return Err(AnnotateError::Forbidden(format!("{annotator} is not assigned to event {event_id}")));
        }
        if view.context.is_none() {
            return Err(AnnotateError::NoContext(event_id.to_string()));
        }
        let labeled = self.log.labels_of(annotator);
        let mut cursors = self.cursors.lock().unwrap();
        let key = (annotator.to_string(), event_id.to_string());
        let start = cursors.get(&key).copied().unwrap_or(0);
        let cursor = Self::next_unlabeled(view, &labeled, start);
        cursors.insert(key, cursor);
        Ok(self.respond(event_id, view, cursor, &labeled))
    }

    /// Records a label. The vote is on disk before this returns.
    pub fn submit(&self, token: Option<&str>, annotator: &str, cluster_id: &str, label: i64) -> Result<NextResponse, AnnotateError> {
        let who = self.authorize(token, annotator)?;
        let label = u8::try_from(label)
            .ok()
            .and_then(|l| ImportanceLabel::try_from(l).ok())
            .ok_or(AnnotateError::InvalidLabel(label))?;
        let (event_id, position) =
            self.clusters.get(cluster_id).ok_or_else(|| AnnotateError::UnknownCluster(cluster_id.to_string()))?;
        if !who.may_open(event_id) {
            return Err(AnnotateError::Forbidden(format!("{annotator} is not assigned to event {event_id}")));
        }
        let view = self.view(event_id)?;
        if view.context.is_none() {
            return Err(AnnotateError::NoContext(event_id.clone()));
        }
        // One session lock across check, write and advance keeps the cursor
        // consistent under concurrent submissions from the same annotator.
        let mut cursors = self.cursors.lock().unwrap();
        let mut labeled = self.log.labels_of(annotator);
        let key = (annotator.to_string(), event_id.clone());
        let cursor = Self::next_unlabeled(view, &labeled, cursors.get(&key).copied().unwrap_or(0));
        let relabel = labeled.contains_key(cluster_id);
        if !relabel && *position != cursor {
            let expected = view.clusters.get(cursor).map_or("none".to_string(), |c| c.cluster_id.clone());
            return Err(AnnotateError::Stale { annotator: annotator.to_string(), cluster: cluster_id.to_string(), expected });
        }
        self.log.append(annotator, event_id, cluster_id, label)?;
        labeled.insert(cluster_id.to_string(), label);
        let cursor = Self::next_unlabeled(view, &labeled, cursor);
        cursors.insert(key, cursor);
        Ok(self.respond(event_id, view, cursor, &labeled))
    }

    pub fn export(&self, token: Option<&str>, event_id: Option<&str>) -> Result<Vec<VoteRecord>, AnnotateError> {
        let who = self.authenticate(token)?;
        if !who.admin {
            return Err(AnnotateError::Forbidden("export needs an admin token".into()));
        }
        Ok(self.log.export(event_id))
    }

    pub fn log(&self) -> &VoteLog {
        &self.log
    }
}
