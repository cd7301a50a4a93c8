use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::stage::REPORTS_DIR;

/// What a stage did, with enough of the configuration echoed to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub ok: bool,
    pub duration_ms: u64,
    pub inputs: BTreeMap<String, Value>,
    pub outputs: BTreeMap<String, Value>,
    pub artifacts: Vec<String>,
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    pub config: RunConfig,
}

impl StageReport {
    pub fn new(stage: &str, config: &RunConfig) -> Self {
        Self {
            stage: stage.to_string(),
            ok: true,
            duration_ms: 0,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            artifacts: Vec::new(),
            params: Value::Null,
            table: None,
            config: config.clone(),
        }
    }

    pub fn input(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.inputs.insert(key.into(), serde_json::to_value(v).expect("report value"));
        self
    }

    pub fn output(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.outputs.insert(key.into(), serde_json::to_value(v).expect("report value"));
        self
    }

    pub fn params(&mut self, v: impl Serialize) -> &mut Self {
        self.params = serde_json::to_value(v).expect("report value");
        self
    }

    pub fn artifact(&mut self, path: &Path) -> &mut Self {
        self.artifacts.push(path.display().to_string());
        self
    }

    /// Saves the report under `<corpus>/reports/<stage>.json`.
    pub fn save(&self, corpus_dir: &Path) -> Result<(), CliError> {
        let path = corpus_dir.join(REPORTS_DIR).join(format!("{}.json", self.stage));
        crate::io::write_json(&path, self)
    }

    pub fn human(&self) -> String {
        let mut out = format!("{}: ok in {} ms\n", self.stage, self.duration_ms);
        for (k, v) in &self.outputs {
            if v.is_number() || v.is_string() || v.is_boolean() {
                writeln!(out, "  {k}: {v}").unwrap();
            }
        }
        for a in &self.artifacts {
            writeln!(out, "  wrote {a}").unwrap();
        }
        if let Some(t) = &self.table {
            out.push('\n');
            out.push_str(t);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echoes_config_and_round_trips() {
        let cfg = RunConfig::from_toml("corpus_dir = \"c\"").unwrap();
        let mut r = StageReport::new("segment", &cfg);
        r.input("articles", 3).output("statements", 12).params(serde_json::json!({"k": 1}));
        let text = serde_json::to_string(&r).unwrap();
        let back: StageReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.config.cluster.articles.eps, 0.04);
        assert!(r.human().contains("statements: 12"));
    }
}
