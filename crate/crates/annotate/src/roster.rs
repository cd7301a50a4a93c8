use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::service::AnnotateError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub annotator: String,
    pub token: String,
    /// Assigned events; empty means any event.
    #[serde(default)]
    pub events: Vec<String>,
    /// May read the vote export.
    #[serde(default)]
    pub admin: bool,
}

/// Static list of annotators and their bearer tokens.
#[derive(Debug, Clone, Default)]
pub struct Roster {
    by_token: HashMap<String, RosterEntry>,
}

impl Roster {
    pub fn new(entries: Vec<RosterEntry>) -> Result<Self, AnnotateError> {
        let mut by_token = HashMap::new();
        let mut names = std::collections::HashSet::new();
        for e in entries {
            if e.token.is_empty() || e.annotator.is_empty() {
                return Err(AnnotateError::Roster("empty annotator id or token".into()));
            }
            if !names.insert(e.annotator.clone()) {
                return Err(AnnotateError::Roster(format!("annotator {} listed twice", e.annotator)));
            }
            if by_token.insert(e.token.clone(), e).is_some() {
                return Err(AnnotateError::Roster("token shared by two annotators".into()));
            }
        }
        Ok(Self { by_token })
    }

    /// A JSON array of entries.
    pub fn load(path: &Path) -> Result<Self, AnnotateError> {
        let text = std::fs::read_to_string(path).map_err(|e| AnnotateError::Roster(format!("{}: {e}", path.display())))?;
        let entries: Vec<RosterEntry> =
            serde_json::from_str(&text).map_err(|e| AnnotateError::Roster(format!("{}: {e}", path.display())))?;
        Self::new(entries)
    }

    pub fn authenticate(&self, token: &str) -> Option<&RosterEntry> {
        self.by_token.get(token)
    }

    pub fn len(&self) -> usize {
        self.by_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_token.is_empty()
    }
}

impl RosterEntry {
    pub fn may_open(&self, event_id: &str) -> bool {
        self.events.is_empty() || self.events.iter().any(|e| e == event_id)
    }
}
