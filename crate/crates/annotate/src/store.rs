//! Append-only vote log: one JSON record per line, synced to disk before a
//! submission is acknowledged.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use cherry_core::dataset::ImportanceLabel;
use serde::{Deserialize, Serialize};

use crate::service::AnnotateError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub seq: u64,
    pub annotator: String,
    pub event_id: String,
    pub cluster_id: String,
    pub label: ImportanceLabel,
    pub submitted_at: DateTime<Utc>,
}

pub struct VoteLog {
    path: PathBuf,
    file: Mutex<File>,
    records: RwLock<Arc<Vec<VoteRecord>>>,
}

impl VoteLog {
    /// Opens or creates the log. A torn final line left by a crash is cut
    /// off; any other unreadable line is an error.
    pub fn open(path: &Path) -> Result<Self, AnnotateError> {
        let io = |e: std::io::Error| AnnotateError::Storage(format!("{}: {e}", path.display()));
        let mut records = Vec::new();
        let mut good_len = 0u64;
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io)?);
            let mut offset = 0u64;
            let mut torn = false;
            for (n, line) in reader.split(b'\n').enumerate() {
                let line = line.map_err(io)?;
                offset += line.len() as u64 + 1;
                if torn {
                    return Err(AnnotateError::Storage(format!("{}: unreadable record before line {}", path.display(), n + 1)));
                }
                if line.iter().all(u8::is_ascii_whitespace) {
                    good_len = offset;
                    continue;
                }
                match serde_json::from_slice::<VoteRecord>(&line) {
                    Ok(r) => {
                        records.push(r);
                        good_len = offset;
                    }
                    Err(_) => torn = true,
                }
            }
            let actual = std::fs::metadata(path).map_err(io)?.len();
            if good_len > actual {
                // Last line had no newline but parsed.
                good_len = actual;
            }
            if good_len < actual {
                tracing::warn!(path = %path.display(), dropped = actual - good_len, "truncating torn vote record");
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        file.set_len(good_len).map_err(io)?;
        if good_len > 0 && !ends_with_newline(path).map_err(io)? {
            (&file).write_all(b"\n").map_err(io)?;
        }
        file.sync_all().map_err(io)?;
        Ok(Self { path: path.to_path_buf(), file: Mutex::new(file), records: RwLock::new(Arc::new(records)) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes and syncs one record. Returns once the bytes are on disk.
    pub fn append(
        &self,
        annotator: &str,
        event_id: &str,
        cluster_id: &str,
        label: ImportanceLabel,
    ) -> Result<VoteRecord, AnnotateError> {
        let io = |e: std::io::Error| AnnotateError::Storage(format!("{}: {e}", self.path.display()));
        let mut file = self.file.lock().unwrap();
        let seq = self.snapshot().last().map_or(1, |r| r.seq + 1);
        let record = VoteRecord {
            seq,
            annotator: annotator.to_string(),
            event_id: event_id.to_string(),
            cluster_id: cluster_id.to_string(),
            label,
            submitted_at: Utc::now(),
        };
        let mut line = serde_json::to_vec(&record).expect("vote serializes");
        line.push(b'\n');
        file.write_all(&line).map_err(io)?;
        file.sync_data().map_err(io)?;
        let mut guard = self.records.write().unwrap();
        let mut next = Vec::clone(&guard);
        next.push(record.clone());
        *guard = Arc::new(next);
        Ok(record)
    }

    /// Every record in append order.
    pub fn snapshot(&self) -> Arc<Vec<VoteRecord>> {
        Arc::clone(&self.records.read().unwrap())
    }

    /// Latest vote per (annotator, cluster), ordered by when that latest
    /// vote was appended.
    pub fn export(&self, event_id: Option<&str>) -> Vec<VoteRecord> {
        compact(&self.snapshot(), event_id)
    }

    /// The annotator's current label per cluster.
    pub fn labels_of(&self, annotator: &str) -> HashMap<String, ImportanceLabel> {
        self.snapshot().iter().filter(|r| r.annotator == annotator).map(|r| (r.cluster_id.clone(), r.label)).collect()
    }
}

fn ends_with_newline(path: &Path) -> std::io::Result<bool> {
    use std::io::{Read, Seek, SeekFrom};
    let mut f = File::open(path)?;
    if f.metadata()?.len() == 0 {
        return Ok(true);
    }
    f.seek(SeekFrom::End(-1))?;
    let mut b = [0u8];
    f.read_exact(&mut b)?;
    Ok(b[0] == b'\n')
}

pub(crate) fn compact(records: &[VoteRecord], event_id: Option<&str>) -> Vec<VoteRecord> {
    let mut latest: HashMap<(&str, &str), usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        latest.insert((r.annotator.as_str(), r.cluster_id.as_str()), i);
    }
    let mut keep: Vec<usize> = latest.into_values().collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| records[i].clone()).filter(|r| event_id.is_none_or(|e| r.event_id == e)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ImportanceLabel::*;

    #[test]
    fn last_write_wins() {
        let dir = tempfile::tempdir().unwrap();
        let log = VoteLog::open(&dir.path().join("votes.jsonl")).unwrap();
        log.append("a", "e1", "c1", VeryImportant).unwrap();
        log.append("b", "e1", "c1", NotSure).unwrap();
        log.append("a", "e1", "c1", KindOfImportant).unwrap();
        log.append("a", "e2", "c9", VeryImportant).unwrap();
        let all = log.export(None);
        assert_eq!(
            all.iter().map(|r| (r.annotator.as_str(), r.cluster_id.as_str(), r.label)).collect::<Vec<_>>(),
            [("b", "c1", NotSure), ("a", "c1", KindOfImportant), ("a", "c9", VeryImportant)]
        );
        assert_eq!(log.export(Some("e2")).len(), 1);
        assert_eq!(log.snapshot().len(), 4);
        assert_eq!(log.labels_of("a")["c1"], KindOfImportant);
    }

    #[test]
    fn reopen_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("votes.jsonl");
        {
            let log = VoteLog::open(&path).unwrap();
            log.append("a", "e", "c1", VeryImportant).unwrap();
            log.append("a", "e", "c2", NotVeryImportant).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"seq":3,"annotator":"a","ev"#).unwrap();
        drop(f);
        let log = VoteLog::open(&path).unwrap();
        assert_eq!(log.snapshot().len(), 2);
        let r = log.append("a", "e", "c3", VeryImportant).unwrap();
        assert_eq!(r.seq, 3);
        let log = VoteLog::open(&path).unwrap();
        assert_eq!(log.snapshot().len(), 3);
    }

    #[test]
    fn corrupt_middle_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("votes.jsonl");
        {
            let log = VoteLog::open(&path).unwrap();
            log.append("a", "e", "c1", VeryImportant).unwrap();
        }
        let good = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, format!("garbage\n{good}")).unwrap();
        assert!(VoteLog::open(&path).is_err());
    }

    #[test]
    fn empty_export() {
        let dir = tempfile::tempdir().unwrap();
        let log = VoteLog::open(&dir.path().join("v.jsonl")).unwrap();
        assert!(log.export(None).is_empty());
    }
}
