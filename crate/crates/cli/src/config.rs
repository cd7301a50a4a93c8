//! The run configuration shared by every stage, read from a TOML file.
//! Relative paths are resolved against the file's directory.

use std::path::{Path, PathBuf};

use cherry_core::cluster::DbscanParams;
use cherry_core::dataset::{ClassificationConfig, MIN_AGREEMENT, MIN_ANNOTATORS};
use cherry_core::detect::DetectParams;
use cherry_core::ingest::{FetchSpec, Provider};
use cherry_core::scoring::{ChatConfig, ContextPolicy, ContextSpec, LexRankParams, RemoteClassifierConfig, DEFAULT_THRESHOLD};
use cherry_core::textproc::RemoteEmbeddingConfig;
use serde::{Deserialize, Serialize};

use crate::stage::Stage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    #[serde(default)]
    pub registry: Option<PathBuf>,
    #[serde(default)]
    pub fetch: Option<FetchSpec>,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default = "default_context")]
    pub context: ContextSpec,
    #[serde(default)]
    pub scorer: ScorerConfig,
    #[serde(default)]
    pub summarizer: Option<ChatConfig>,
    #[serde(default)]
    pub detect: DetectParams,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub correlate: CorrelateConfig,
    #[serde(default)]
    pub annotate: AnnotateConfig,
    #[serde(default)]
    pub seeds: Seeds,
}

fn default_context() -> ContextSpec {
    ContextSpec::neutral(400)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingConfig {
    /// Offline character n-gram hashing.
    Hashed { dimension: usize },
    Remote(RemoteEmbeddingConfig),
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig::Hashed { dimension: cherry_core::textproc::HashedNgramProvider::DEFAULT_DIMENSION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    #[serde(default = "DbscanParams::articles")]
    pub articles: DbscanParams,
    #[serde(default = "DbscanParams::statements")]
    pub statements: DbscanParams,
    /// Keep only these events after article clustering.
    #[serde(default)]
    pub allow_events: Option<Vec<String>>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { articles: DbscanParams::articles(), statements: DbscanParams::statements(), allow_events: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScorerConfig {
    Lexrank {
        #[serde(default)]
        params: LexRankParams,
    },
    Remote(RemoteClassifierConfig),
    Prompt {
        chat: ChatConfig,
        /// JSON lines of `{context, statement, important}`.
        #[serde(default)]
        demonstrations: Option<PathBuf>,
        #[serde(default = "ten")]
        demonstration_count: usize,
    },
    /// Fixed important set: one statement per line.
    Lookup {
        important: PathBuf,
        #[serde(default = "threshold")]
        threshold: f64,
    },
}

fn ten() -> usize {
    10
}

fn threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig::Lexrank { params: LexRankParams::default() }
    }
}

impl ScorerConfig {
    pub fn label(&self) -> String {
        match self {
            ScorerConfig::Lexrank { .. } => "lexrank".into(),
            ScorerConfig::Remote(c) => format!("remote {}", c.url),
            ScorerConfig::Prompt { demonstrations: None, .. } => "prompt zero-shot".into(),
            ScorerConfig::Prompt { demonstration_count, .. } => format!("prompt {demonstration_count}-shot"),
            ScorerConfig::Lookup { .. } => "lookup".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Raw votes, one JSON record per line (the annotation export works).
    #[serde(default)]
    pub votes: Option<PathBuf>,
    /// Classification configuration 1..=4.
    #[serde(default = "one")]
    pub classes: u8,
    #[serde(default = "ratio")]
    pub ratio: f64,
    #[serde(default = "min_annotators")]
    pub min_annotators: usize,
    #[serde(default = "min_agreement")]
    pub min_agreement: f64,
}

fn one() -> u8 {
    1
}
fn ratio() -> f64 {
    0.85
}
fn min_annotators() -> usize {
    MIN_ANNOTATORS
}
fn min_agreement() -> f64 {
    MIN_AGREEMENT
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            votes: None,
            classes: 1,
            ratio: ratio(),
            min_annotators: MIN_ANNOTATORS,
            min_agreement: MIN_AGREEMENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "lengths")]
    pub lengths: Vec<usize>,
    /// Scorers to compare; the main scorer when empty.
    #[serde(default)]
    pub scorers: Vec<ScorerConfig>,
}

pub fn lengths() -> Vec<usize> {
    vec![100, 200, 300, 400, 500]
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { lengths: lengths(), scorers: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateConfig {
    /// Raters read from the outlet registry.
    #[serde(default = "raters")]
    pub raters: Vec<String>,
    /// Extra rating sources: JSON object `{source: {outlet_id: score}}`.
    #[serde(default)]
    pub ratings: Option<PathBuf>,
}

fn raters() -> Vec<String> {
    vec!["MBFC".into(), "AllSides".into()]
}

impl Default for CorrelateConfig {
    fn default() -> Self {
        Self { raters: raters(), ratings: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotateConfig {
    #[serde(default = "bind")]
    pub bind: String,
    #[serde(default)]
    pub roster: Option<PathBuf>,
    /// Defaults to `votes.jsonl` inside the corpus directory.
    #[serde(default)]
    pub votes_log: Option<PathBuf>,
}

fn bind() -> String {
    "127.0.0.1:8080".into()
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        Self { bind: bind(), roster: None, votes_log: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    #[serde(default = "split_seed")]
    pub split: u64,
    #[serde(default = "demo_seed")]
    pub demonstrations: u64,
}

fn split_seed() -> u64 {
    13
}
fn demo_seed() -> u64 {
    7
}

impl Default for Seeds {
    fn default() -> Self {
        Self { split: split_seed(), demonstrations: demo_seed() }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve(&base);
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_dir);
        self.registry.iter_mut().for_each(fix);
        if let Some(FetchSpec { provider: Provider::LocalDirectory { path }, .. }) = &mut self.fetch {
            fix(path);
        }
        let fix_scorer = |s: &mut ScorerConfig| match s {
            ScorerConfig::Lookup { important, .. } => fix(important),
            ScorerConfig::Prompt { demonstrations: Some(d), .. } => fix(d),
            _ => {}
        };
        fix_scorer(&mut self.scorer);
        self.sweep.scorers.iter_mut().for_each(fix_scorer);
        self.dataset.votes.iter_mut().for_each(fix);
        self.correlate.ratings.iter_mut().for_each(fix);
        self.annotate.roster.iter_mut().for_each(fix);
        self.annotate.votes_log.iter_mut().for_each(fix);
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.corpus_dir.join(crate::stage::DATASET_FILE)
    }

    pub fn votes_log_path(&self) -> PathBuf {
        self.annotate.votes_log.clone().unwrap_or_else(|| self.corpus_dir.join("votes.jsonl"))
    }

    /// Every problem that would stop `stage`, not just the first.
    pub fn validate_for(&self, stage: Stage) -> Vec<String> {
        let mut v = Vec::new();
        if self.corpus_dir.as_os_str().is_empty() {
            v.push("corpus_dir is empty".into());
        }
        for (name, p) in [("cluster.articles", &self.cluster.articles), ("cluster.statements", &self.cluster.statements)] {
            if let Err(e) = p.validate() {
                v.push(format!("{name}: {e}"));
            }
        }
        if let Err(e) = self.context.validate() {
            v.push(format!("context: {e}"));
        }
        if let Err(e) = self.detect.validate() {
            v.push(format!("detect: {e}"));
        }
        match &self.embedding {
            EmbeddingConfig::Hashed { dimension: 0 } => v.push("embedding.dimension must be positive".into()),
            EmbeddingConfig::Remote(r) => check_url(&mut v, "embedding.url", &r.url),
            _ => {}
        }
        if ClassificationConfig::get(self.dataset.classes).is_err() {
            v.push(format!("dataset.classes {} is not one of 1, 2, 3, 4", self.dataset.classes));
        }
        if !(self.dataset.ratio > 0.0 && self.dataset.ratio < 1.0) {
            v.push(format!("dataset.ratio {} outside (0, 1)", self.dataset.ratio));
        }
        if self.dataset.min_annotators == 0 {
            v.push("dataset.min_annotators must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.dataset.min_agreement) {
            v.push(format!("dataset.min_agreement {} outside [0, 1]", self.dataset.min_agreement));
        }
        if self.sweep.lengths.is_empty() || self.sweep.lengths.contains(&0) {
            v.push("sweep.lengths must be non-empty and positive".into());
        }
        for r in &self.correlate.raters {
            if r.parse::<cherry_core::model::Rater>().is_err() {
                v.push(format!("correlate.raters: unknown rater {r}"));
            }
        }
        check_scorer(&mut v, "scorer", &self.scorer, stage.scores());
        for (i, s) in self.sweep.scorers.iter().enumerate() {
            check_scorer(&mut v, &format!("sweep.scorers[{i}]"), s, stage == Stage::Sweep);
        }
        if self.context.policy == ContextPolicy::BiasedPairSummarized && stage.scores() && self.summarizer.is_none() {
            v.push("context.policy biased_pair_summarized needs a [summarizer]".into());
        }
        if let Some(s) = &self.summarizer {
            check_url(&mut v, "summarizer.url", &s.url);
        }

        match stage {
            Stage::Ingest => {
                match &self.registry {
                    None => v.push("registry is not set".into()),
                    Some(p) if !p.is_file() => v.push(format!("registry {} does not exist", p.display())),
                    _ => {}
                }
                match &self.fetch {
                    None => v.push("[fetch] is not set".into()),
                    Some(f) => {
                        if let Err(e) = f.validate() {
                            v.push(format!("fetch: {e}"));
                        }
                        match &f.provider {
                            Provider::LocalDirectory { path } if !path.is_dir() => {
                                v.push(format!("fetch.provider.path {} is not a directory", path.display()))
                            }
                            Provider::GdeltLikeApi { url, .. } => check_url(&mut v, "fetch.provider.url", url),
                            _ => {}
                        }
                    }
                }
            }
            Stage::BuildDataset => match &self.dataset.votes {
                None => v.push("dataset.votes is not set".into()),
                Some(p) if !p.is_file() => v.push(format!("dataset.votes {} does not exist", p.display())),
                _ => {}
            },
            Stage::Correlate => {
                if let Some(p) = &self.correlate.ratings {
                    if !p.is_file() {
                        v.push(format!("correlate.ratings {} does not exist", p.display()));
                    }
                }
            }
            Stage::ServeAnnotator => {
                match &self.annotate.roster {
                    None => v.push("annotate.roster is not set".into()),
                    Some(p) if !p.is_file() => v.push(format!("annotate.roster {} does not exist", p.display())),
                    _ => {}
                }
                if self.annotate.bind.parse::<std::net::SocketAddr>().is_err() {
                    v.push(format!("annotate.bind {} is not a socket address", self.annotate.bind));
                }
            }
            _ => {}
        }
        v
    }
}

fn check_url(v: &mut Vec<String>, name: &str, url: &str) {
    let rest = url.strip_prefix("http://").or_else(|| url.strip_prefix("https://"));
    if rest.is_none_or(|r| r.split('/').next().is_none_or(str::is_empty)) {
        v.push(format!("{name} {url:?} is not an http(s) URL"));
    }
}

fn check_scorer(v: &mut Vec<String>, name: &str, s: &ScorerConfig, check_files: bool) {
    match s {
        ScorerConfig::Lexrank { params } => {
            if let Err(e) = params.validate() {
                v.push(format!("{name}.params: {e}"));
            }
        }
        ScorerConfig::Remote(r) => {
            check_url(v, &format!("{name}.url"), &r.url);
            if !(0.0..=1.0).contains(&r.threshold) {
                v.push(format!("{name}.threshold {} outside [0, 1]", r.threshold));
            }
        }
        ScorerConfig::Prompt { chat, demonstrations, demonstration_count } => {
            check_url(v, &format!("{name}.chat.url"), &chat.url);
            if let Some(d) = demonstrations {
                if check_files && !d.is_file() {
                    v.push(format!("{name}.demonstrations {} does not exist", d.display()));
                }
                if *demonstration_count == 0 {
                    v.push(format!("{name}.demonstration_count must be positive"));
                }
            }
        }
        ScorerConfig::Lookup { important, threshold } => {
            if check_files && !important.is_file() {
                v.push(format!("{name}.important {} does not exist", important.display()));
            }
            if !(0.0..=1.0).contains(threshold) {
                v.push(format!("{name}.threshold {threshold} outside [0, 1]"));
            }
        }
    }
}
