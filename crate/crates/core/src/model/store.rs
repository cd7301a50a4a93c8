//! Line-delimited corpus store.
//!
//! Layout of a corpus directory:
//!
//! ```text
//! outlets.jsonl  articles.jsonl  statements.jsonl  events.jsonl  clusters.jsonl
//! manifest.json  (record counts, SHA-256 over the five files in that order)
//! ```
//!
//! Every `.jsonl` file opens with a schema header line followed by one record
//! per line.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{validate_corpus, Corpus, TimeWindow};
use crate::error::CorpusError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

const FILES: [&str; 5] = ["outlets", "articles", "statements", "events", "clusters"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordCounts {
    pub outlet: usize,
    pub article: usize,
    pub statement: usize,
    pub event: usize,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub counts: RecordCounts,
    pub sha256: String,
    #[serde(default)]
    pub collection_window: Option<TimeWindow>,
    /// Pipeline stages that have written this corpus, in order.
    #[serde(default)]
    pub stages: Vec<String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self, CorpusError> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Err(CorpusError::MissingFile(path));
        }
        let text = fs::read_to_string(&path).map_err(|e| CorpusError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|source| CorpusError::Parse { path, line: 1, source })
    }

    pub fn has_stage(&self, stage: &str) -> bool {
        self.stages.iter().any(|s| s == stage)
    }

    /// Rewrites only the manifest, e.g. after a stage whose output lives
    /// outside the five record files.
    pub fn write(&self, dir: &Path) -> Result<(), CorpusError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        replace_file(&dir.join(MANIFEST_FILE), &bytes)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
    version: u32,
}

pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<Manifest, CorpusError> {
    save_corpus_with_stages(corpus, dir, &[])
}

/// Validates, then replaces every record file and the manifest.
pub fn save_corpus_with_stages(corpus: &Corpus, dir: &Path, stages: &[String]) -> Result<Manifest, CorpusError> {
    if let Some(v) = validate_corpus(corpus).into_iter().next() {
        return Err(CorpusError::Invalid { record: v.record, message: v.message });
    }
    write_unchecked(corpus, dir, stages)
}

pub(crate) fn write_unchecked(corpus: &Corpus, dir: &Path, stages: &[String]) -> Result<Manifest, CorpusError> {
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
    let payloads = [
        encode("outlets", &corpus.outlets)?,
        encode("articles", &corpus.articles)?,
        encode("statements", &corpus.statements)?,
        encode("events", &corpus.events)?,
        encode("clusters", &corpus.clusters)?,
    ];
    let mut hasher = Sha256::new();
    for (name, bytes) in FILES.iter().zip(&payloads) {
        hasher.update(bytes);
        replace_file(&dir.join(format!("{name}.jsonl")), bytes)?;
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        counts: RecordCounts {
            outlet: corpus.outlets.len(),
            article: corpus.articles.len(),
            statement: corpus.statements.len(),
            event: corpus.events.len(),
            cluster: corpus.clusters.len(),
        },
        sha256: hex::encode(hasher.finalize()),
        collection_window: corpus.collection_window,
        stages: stages.to_vec(),
    };
    manifest.write(dir)?;
    Ok(manifest)
}

pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let manifest = Manifest::read(dir)?;
    let mut hasher = Sha256::new();
    let mut raw = Vec::with_capacity(FILES.len());
    for name in FILES {
        let path = dir.join(format!("{name}.jsonl"));
        if !path.exists() {
            return Err(CorpusError::MissingFile(path));
        }
        let bytes = fs::read(&path).map_err(|e| CorpusError::io(&path, e))?;
        hasher.update(&bytes);
        raw.push((path, bytes));
    }
    let actual = hex::encode(hasher.finalize());
    if actual != manifest.sha256 {
        return Err(CorpusError::HashMismatch { expected: manifest.sha256, actual });
    }

    let corpus = Corpus {
        collection_window: manifest.collection_window,
        outlets: decode("outlets", &raw[0].0, &raw[0].1)?,
        articles: decode("articles", &raw[1].0, &raw[1].1)?,
        statements: decode("statements", &raw[2].0, &raw[2].1)?,
        events: decode("events", &raw[3].0, &raw[3].1)?,
        clusters: decode("clusters", &raw[4].0, &raw[4].1)?,
    };
    check_references(&corpus)?;
    Ok(corpus)
}

fn check_references(c: &Corpus) -> Result<(), CorpusError> {
    let outlets: HashSet<&str> = c.outlets.iter().map(|o| o.id.as_str()).collect();
    let articles: HashSet<&str> = c.articles.iter().map(|a| a.id.as_str()).collect();
    let statements: HashSet<&str> = c.statements.iter().map(|s| s.id.as_str()).collect();
    let events: HashSet<&str> = c.events.iter().map(|e| e.id.as_str()).collect();
    let dangling = |record: String, target: &str| CorpusError::DanglingReference { record, target: target.to_string() };

    for a in &c.articles {
        if !outlets.contains(a.outlet_id.as_str()) {
            return Err(dangling(format!("article:{}", a.id), &a.outlet_id));
        }
    }
    for s in &c.statements {
        if !articles.contains(s.article_id.as_str()) {
            return Err(dangling(format!("statement:{}", s.id), &s.article_id));
        }
    }
    for e in &c.events {
        if let Some(id) = e.article_ids.iter().find(|id| !articles.contains(id.as_str())) {
            return Err(dangling(format!("event:{}", e.id), id));
        }
    }
    for cl in &c.clusters {
        if !events.contains(cl.event_id.as_str()) {
            return Err(dangling(format!("cluster:{}", cl.id), &cl.event_id));
        }
        let refs = cl.statement_ids.iter().chain(std::iter::once(&cl.representative_id));
        if let Some(id) = refs.into_iter().find(|id| !statements.contains(id.as_str())) {
            return Err(dangling(format!("cluster:{}", cl.id), id));
        }
    }
    Ok(())
}

fn encode<T: Serialize>(name: &str, records: &[T]) -> Result<Vec<u8>, CorpusError> {
    let mut out = Vec::new();
    let header = Header { schema: format!("cherry/{name}"), version: SCHEMA_VERSION };
    serde_json::to_writer(&mut out, &header).expect("header serializes");
    out.push(b'\n');
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(|e| CorpusError::Encode(e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

fn decode<T: DeserializeOwned>(name: &str, path: &Path, bytes: &[u8]) -> Result<Vec<T>, CorpusError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CorpusError::io(path, std::io::Error::other(e)))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header: Header = match lines.next() {
        Some((i, line)) => serde_json::from_str(line)
            .map_err(|source| CorpusError::Parse { path: path.to_path_buf(), line: i + 1, source })?,
        None => return Err(CorpusError::Schema { path: path.to_path_buf(), found: "missing header".into() }),
    };
    if header.schema != format!("cherry/{name}") || header.version != SCHEMA_VERSION {
        return Err(CorpusError::Schema {
            path: path.to_path_buf(),
            found: format!("{} v{}", header.schema, header.version),
        });
    }
    lines
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|source| CorpusError::Parse { path: path.to_path_buf(), line: i + 1, source })
        })
        .collect()
}

fn replace_file(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    let tmp: PathBuf = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| CorpusError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CorpusError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CorpusError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CorpusError::io(path, e))
}
