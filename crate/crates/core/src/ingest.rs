//! Article collection from a registry of bias-rated outlets.
//!
//! Providers return one JSON record per line:
//! `{url, outlet_domain, headline, body, published_at, section?}`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{HttpError, JsonClient, RetryPolicy};
use crate::model::{Article, ArticleKind, Outlet, TimeWindow};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no sources configured")]
    NoSources,
    #[error("invalid registry: {0}")]
    InvalidRegistry(String),
    #[error("invalid fetch spec: {0}")]
    InvalidSpec(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("provider failed for {domain}: {source}")]
    Provider { domain: String, source: HttpError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRegistry {
    pub outlets: Vec<Outlet>,
    pub window: TimeWindow,
}

impl SourceRegistry {
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| IngestError::InvalidRegistry(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.outlets.is_empty() {
            return Err(IngestError::NoSources);
        }
        if self.window.start >= self.window.end {
            return Err(IngestError::InvalidRegistry("window start must precede end".into()));
        }
        let mut ids = HashSet::new();
        let mut domains = HashSet::new();
        for o in &self.outlets {
            if !ids.insert(o.id.as_str()) {
                return Err(IngestError::InvalidRegistry(format!("duplicate outlet id {}", o.id)));
            }
            if !domains.insert(normalize_domain(&o.domain)) {
                return Err(IngestError::InvalidRegistry(format!("duplicate domain {}", o.domain)));
            }
        }
        Ok(())
    }

    /// Copy with the window replaced, used when the CLI overrides dates.
    pub fn with_window(mut self, window: TimeWindow) -> Self {
        self.window = window;
        self
    }
}

fn normalize_domain(d: &str) -> String {
    let d = d.trim().to_lowercase();
    d.strip_prefix("www.").unwrap_or(&d).to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provider {
    /// Every `*.jsonl` file in the directory, read in file-name order.
    LocalDirectory { path: PathBuf },
    /// `GET {url}/articles?domain=..&start=..&end=..` returning JSON lines.
    GdeltLikeApi {
        url: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_timeout() -> u64 {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchSpec {
    pub provider: Provider,
    /// Requests per second across all outlets.
    #[serde(default = "default_rate")]
    pub rate_limit: f64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_rate() -> f64 {
    5.0
}

impl FetchSpec {
    pub fn local(path: impl Into<PathBuf>) -> Self {
        Self { provider: Provider::LocalDirectory { path: path.into() }, rate_limit: default_rate(), retry: RetryPolicy::default() }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.rate_limit > 0.0 && self.rate_limit.is_finite()) {
            return Err(IngestError::InvalidSpec(format!("rate limit {} must be positive", self.rate_limit)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchReport {
    pub records: usize,
    pub accepted: usize,
    /// Unparseable lines or records missing required fields.
    pub skipped: usize,
    pub out_of_window: usize,
    pub unknown_outlet: usize,
    pub duplicates: usize,
    pub by_kind: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchOutcome {
    pub articles: Vec<Article>,
    pub report: FetchReport,
}

#[derive(Debug, Deserialize)]
struct ProviderRecord {
    url: String,
    outlet_domain: String,
    headline: String,
    body: String,
    published_at: DateTime<Utc>,
    #[serde(default)]
    section: Option<String>,
}

/// Opinion and editorial pieces by provider section first, URL path second.
pub fn infer_kind(url: &str, section: Option<&str>) -> ArticleKind {
    if let Some(section) = section {
        let s = section.trim().to_lowercase();
        if s.contains("editorial") {
            return ArticleKind::Editorial;
        }
        if s.contains("opinion") || s.contains("op-ed") || s == "oped" || s.contains("commentary") {
            return ArticleKind::Opinion;
        }
    }
    let path = url.split_once("://").map_or(url, |(_, rest)| rest);
    let path = path.find('/').map_or("", |i| &path[i..]).to_lowercase();
    let has = |seg: &str| path.split('/').any(|p| p == seg);
    if has("editorial") || has("editorials") {
        ArticleKind::Editorial
    } else if has("opinion") || has("opinions") || has("op-ed") || has("oped") {
        ArticleKind::Opinion
    } else {
        ArticleKind::News
    }
}

pub fn filter_news_only(articles: Vec<Article>) -> Vec<Article> {
    articles.into_iter().filter(|a| a.kind == ArticleKind::News).collect()
}

/// Spaces requests at least `1 / rate` seconds apart.
struct RateLimiter {
    interval: Duration,
    next: Mutex<Instant>,
}

impl RateLimiter {
    fn new(rate: f64) -> Self {
        Self { interval: Duration::from_secs_f64(1.0 / rate), next: Mutex::new(Instant::now()) }
    }

    fn acquire(&self) {
        let wait = {
            let mut next = self.next.lock().unwrap();
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.interval;
            slot - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

pub fn fetch_articles(registry: &SourceRegistry, spec: &FetchSpec) -> Result<FetchOutcome, IngestError> {
    registry.validate()?;
    spec.validate()?;
    let lines: Vec<String> = match &spec.provider {
        Provider::LocalDirectory { path } => read_directory(path)?,
        Provider::GdeltLikeApi { url, timeout_secs } => {
            let client = JsonClient::new(url, Duration::from_secs(*timeout_secs), spec.retry, usize::MAX)
                .map_err(|source| IngestError::Provider { domain: url.clone(), source })?;
            let limiter = RateLimiter::new(spec.rate_limit);
            let per_outlet: Result<Vec<String>, IngestError> = registry
                .outlets
                .par_iter()
                .map(|o| {
                    limiter.acquire();
                    let query = format!(
                        "/articles?domain={}&start={}&end={}",
                        o.domain,
                        registry.window.start.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                        registry.window.end.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                    );
                    tracing::info!(domain = %o.domain, "fetching");
                    client.get_text(&query).map_err(|source| IngestError::Provider { domain: o.domain.clone(), source })
                })
                .collect();
            per_outlet?.iter().flat_map(|body| body.lines().map(str::to_string)).collect()
        }
    };
    Ok(assemble(registry, &lines))
}

fn read_directory(dir: &Path) -> Result<Vec<String>, IngestError> {
    let io = |source| IngestError::Io { path: dir.into(), source };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut lines = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f).map_err(|source| IngestError::Io { path: f.clone(), source })?;
        lines.extend(text.lines().map(str::to_string));
    }
    Ok(lines)
}

fn assemble(registry: &SourceRegistry, lines: &[String]) -> FetchOutcome {
    let by_domain: HashMap<String, &Outlet> = registry.outlets.iter().map(|o| (normalize_domain(&o.domain), o)).collect();
    let mut report = FetchReport::default();
    let mut seen = HashSet::new();
    let mut articles = Vec::new();
    for line in lines.iter().filter(|l| !l.trim().is_empty()) {
        report.records += 1;
        let rec: ProviderRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                tracing::warn!(error = %e, "skipping malformed provider record");
                report.skipped += 1;
                continue;
            }
        };
        if rec.url.trim().is_empty() || rec.headline.trim().is_empty() || rec.body.trim().is_empty() {
            report.skipped += 1;
            continue;
        }
        let Some(outlet) = by_domain.get(&normalize_domain(&rec.outlet_domain)) else {
            report.unknown_outlet += 1;
            continue;
        };
        if !registry.window.contains(rec.published_at) {
            report.out_of_window += 1;
            continue;
        }
        let url = rec.url.trim().to_string();
        if !seen.insert((outlet.id.clone(), url.clone())) {
            report.duplicates += 1;
            continue;
        }
        let kind = infer_kind(&url, rec.section.as_deref());
        *report.by_kind.entry(format!("{kind:?}").to_lowercase()).or_default() += 1;
        articles.push(Article {
            id: Article::derive_id(&outlet.id, &url),
            outlet_id: outlet.id.clone(),
            url,
            headline: rec.headline.trim().to_string(),
            body: rec.body.trim().to_string(),
            published_at: rec.published_at,
            kind,
        });
    }
    articles.sort_by(|a, b| (&a.outlet_id, &a.url).cmp(&(&b.outlet_id, &b.url)));
    report.accepted = articles.len();
    FetchOutcome { articles, report }
}
