//! From annotator votes to a class-labeled, event-split dataset.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Corpus, StatementCluster};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DatasetError {
    #[error("vote references unknown cluster {0}")]
    UnknownCluster(String),
    #[error("no context article for event {0}")]
    MissingContext(String),
    #[error("label {0} is not in 1..=5")]
    InvalidLabel(u8),
    #[error("classification config {0} is not in 1..=4")]
    InvalidConfig(u8),
    #[error("need at least 2 events to split, got {0}")]
    TooFewEvents(usize),
    #[error("split ratio {0} outside (0, 1)")]
    InvalidRatio(f64),
    #[error("{record} references missing {target}")]
    Dangling { record: String, target: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ImportanceLabel {
    VeryImportant = 1,
    KindOfImportant = 2,
    NotVeryImportant = 3,
    ExcerptsIncorrect = 4,
    NotSure = 5,
}

impl ImportanceLabel {
    pub const ALL: [ImportanceLabel; 5] = [
        ImportanceLabel::VeryImportant,
        ImportanceLabel::KindOfImportant,
        ImportanceLabel::NotVeryImportant,
        ImportanceLabel::ExcerptsIncorrect,
        ImportanceLabel::NotSure,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Text shown to annotators.
    pub fn wording(self) -> &'static str {
        match self {
            ImportanceLabel::VeryImportant => "very important",
            ImportanceLabel::KindOfImportant => "kind of important",
            ImportanceLabel::NotVeryImportant => "not very important",
            ImportanceLabel::ExcerptsIncorrect => "the excerpts might be incorrect",
            ImportanceLabel::NotSure => "I am not sure",
        }
    }
}

impl TryFrom<u8> for ImportanceLabel {
    type Error = DatasetError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        ImportanceLabel::ALL.get((v as usize).wrapping_sub(1)).copied().ok_or(DatasetError::InvalidLabel(v))
    }
}

impl From<ImportanceLabel> for u8 {
    fn from(l: ImportanceLabel) -> u8 {
        l.code()
    }
}

impl fmt::Display for ImportanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub annotator: String,
    pub cluster_id: String,
    pub label: ImportanceLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationExample {
    pub id: String,
    pub event_id: String,
    pub cluster_id: String,
    pub statement_id: String,
    pub context_article_id: String,
    pub label: ImportanceLabel,
    pub votes: BTreeMap<String, ImportanceLabel>,
    pub agreement_ratio: f64,
}

impl AnnotationExample {
    pub fn vote_count(&self) -> usize {
        self.votes.len()
    }
}

/// Majority label and agreement ratio of a vote set, or `None` when the top
/// count is shared by two labels.
pub fn majority(votes: &BTreeMap<String, ImportanceLabel>) -> Option<(ImportanceLabel, f64)> {
    let mut counts: BTreeMap<ImportanceLabel, usize> = BTreeMap::new();
    for l in votes.values() {
        *counts.entry(*l).or_default() += 1;
    }
    let top = *counts.values().max()?;
    let mut winners = counts.iter().filter(|(_, c)| **c == top);
    let (label, _) = winners.next()?;
    if winners.next().is_some() {
        return None;
    }
    Some((*label, top as f64 / votes.len() as f64))
}

/// One example per voted cluster, keyed on its representative statement.
/// A later vote by the same annotator on the same cluster replaces the
/// earlier one; tied majorities are dropped.
pub fn aggregate_annotations(
    votes: &[Vote],
    clusters: &[StatementCluster],
    contexts: &BTreeMap<String, String>,
) -> Result<Vec<AnnotationExample>, DatasetError> {
    let by_id: HashMap<&str, &StatementCluster> = clusters.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut grouped: BTreeMap<&str, BTreeMap<String, ImportanceLabel>> = BTreeMap::new();
    for v in votes {
        if !by_id.contains_key(v.cluster_id.as_str()) {
            return Err(DatasetError::UnknownCluster(v.cluster_id.clone()));
        }
        grouped.entry(v.cluster_id.as_str()).or_default().insert(v.annotator.clone(), v.label);
    }
    let mut out = Vec::new();
    for (cluster_id, votes) in grouped {
        let cluster = by_id[cluster_id];
        let Some((label, agreement_ratio)) = majority(&votes) else {
            tracing::debug!(cluster_id, "majority tie, dropping");
            continue;
        };
        let context_article_id =
            contexts.get(&cluster.event_id).ok_or_else(|| DatasetError::MissingContext(cluster.event_id.clone()))?;
        out.push(AnnotationExample {
            id: cluster.id.clone(),
            event_id: cluster.event_id.clone(),
            cluster_id: cluster.id.clone(),
            statement_id: cluster.representative_id.clone(),
            context_article_id: context_article_id.clone(),
            label,
            votes,
            agreement_ratio,
        });
    }
    Ok(out)
}

pub const MIN_ANNOTATORS: usize = 3;
pub const MIN_AGREEMENT: f64 = 0.75;

/// Keeps examples with at least `min_annotators` votes and agreement at or
/// above `min_agreement`.
pub fn filter_examples(examples: Vec<AnnotationExample>, min_annotators: usize, min_agreement: f64) -> Vec<AnnotationExample> {
    examples.into_iter().filter(|e| e.vote_count() >= min_annotators && e.agreement_ratio >= min_agreement).collect()
}

/// Copies a cluster-level example onto every member statement.
pub fn cast_labels(example: &AnnotationExample, cluster: &StatementCluster) -> Vec<AnnotationExample> {
    cluster
        .statement_ids
        .iter()
        .map(|sid| AnnotationExample { id: format!("{}:{sid}", cluster.id), statement_id: sid.clone(), ..example.clone() })
        .collect()
}

pub fn cast_all(examples: &[AnnotationExample], clusters: &[StatementCluster]) -> Result<Vec<AnnotationExample>, DatasetError> {
    let by_id: HashMap<&str, &StatementCluster> = clusters.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut out = Vec::new();
    for e in examples {
        let c = by_id.get(e.cluster_id.as_str()).ok_or_else(|| DatasetError::UnknownCluster(e.cluster_id.clone()))?;
        out.extend(cast_labels(e, c));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationConfig {
    pub id: u8,
    /// Labels merged into class `i + 1`.
    pub classes: Vec<Vec<ImportanceLabel>>,
    pub excluded: Vec<ImportanceLabel>,
}

impl ClassificationConfig {
    pub fn get(id: u8) -> Result<Self, DatasetError> {
        use ImportanceLabel::*;
        let (classes, excluded) = match id {
            1 => (vec![vec![VeryImportant], vec![KindOfImportant, NotVeryImportant, ExcerptsIncorrect, NotSure]], vec![]),
            2 => (vec![vec![VeryImportant], vec![KindOfImportant, NotVeryImportant]], vec![ExcerptsIncorrect, NotSure]),
            3 => (vec![vec![VeryImportant], vec![KindOfImportant, NotVeryImportant], vec![ExcerptsIncorrect, NotSure]], vec![]),
            4 => (vec![vec![VeryImportant], vec![KindOfImportant], vec![NotVeryImportant]], vec![ExcerptsIncorrect, NotSure]),
            _ => return Err(DatasetError::InvalidConfig(id)),
        };
        Ok(Self { id, classes, excluded })
    }

    pub fn all() -> Vec<Self> {
        (1..=4).map(|i| Self::get(i).expect("built-in config")).collect()
    }

    /// 1-based class of a label, `None` when excluded.
    pub fn class_of(&self, label: ImportanceLabel) -> Option<u8> {
        self.classes.iter().position(|c| c.contains(&label)).map(|i| i as u8 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedExample {
    pub example: AnnotationExample,
    pub class: u8,
}

pub fn apply_config(examples: &[AnnotationExample], config: &ClassificationConfig) -> Vec<ClassifiedExample> {
    examples
        .iter()
        .filter_map(|e| config.class_of(e.label).map(|class| ClassifiedExample { example: e.clone(), class }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_events: Vec<String>,
    pub test_events: Vec<String>,
    pub ratio: f64,
    pub seed: u64,
    pub train_examples: usize,
    pub test_examples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Train,
    Test,
}

impl DatasetSplit {
    pub fn side(&self, event_id: &str) -> Option<Side> {
        if self.train_events.binary_search_by(|e| e.as_str().cmp(event_id)).is_ok() {
            Some(Side::Train)
        } else if self.test_events.binary_search_by(|e| e.as_str().cmp(event_id)).is_ok() {
            Some(Side::Test)
        } else {
            None
        }
    }
}

/// Event-level split. Events are shuffled with a seeded RNG and each one
/// goes to train only if that moves the train example count strictly closer
/// to `ratio * total`. Both sides always get at least one event.
pub fn split_by_events<'a>(
    event_ids: impl IntoIterator<Item = &'a str>,
    ratio: f64,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidRatio(ratio));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in event_ids {
        *counts.entry(e).or_default() += 1;
    }
    if counts.len() < 2 {
        return Err(DatasetError::TooFewEvents(counts.len()));
    }
    let total: usize = counts.values().sum();
    let target = ratio * total as f64;
    let mut order: Vec<(&str, usize)> = counts.into_iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut in_train = 0usize;
    for (e, n) in order {
        if ((in_train + n) as f64 - target).abs() < (in_train as f64 - target).abs() {
            train.push((e, n));
            in_train += n;
        } else {
            test.push((e, n));
        }
    }
    if test.is_empty() {
        let (e, n) = train.pop().expect("at least two events");
        in_train -= n;
        test.push((e, n));
    }
    if train.is_empty() {
        let (e, n) = test.remove(0);
        in_train += n;
        train.push((e, n));
    }
    let mut train_events: Vec<String> = train.iter().map(|(e, _)| e.to_string()).collect();
    let mut test_events: Vec<String> = test.iter().map(|(e, _)| e.to_string()).collect();
    train_events.sort();
    test_events.sort();
    Ok(DatasetSplit { train_events, test_events, ratio, seed, train_examples: in_train, test_examples: total - in_train })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRow {
    pub statement_text: String,
    pub context_text: String,
    pub label: u8,
    pub class: u8,
    pub event_id: String,
    pub split: Side,
}

pub fn export_rows(
    dataset: &[ClassifiedExample],
    split: &DatasetSplit,
    corpus: &Corpus,
) -> Result<Vec<ExportRow>, DatasetError> {
    let index = corpus.index();
    dataset
        .iter()
        .map(|c| {
            let e = &c.example;
            let dangling = |target: &str| DatasetError::Dangling { record: e.id.clone(), target: target.to_string() };
            let statement = index.statements.get(e.statement_id.as_str()).ok_or_else(|| dangling(&e.statement_id))?;
            let context = index.articles.get(e.context_article_id.as_str()).ok_or_else(|| dangling(&e.context_article_id))?;
            let side = split.side(&e.event_id).ok_or_else(|| dangling(&e.event_id))?;
            Ok(ExportRow {
                statement_text: statement.text.clone(),
                context_text: context.body.clone(),
                label: e.label.code(),
                class: c.class,
                event_id: e.event_id.clone(),
                split: side,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub labels: Vec<ImportanceLabel>,
    pub count: usize,
    /// Whole percent of the included examples.
    pub percent: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub config: u8,
    pub total: usize,
    pub classes: Vec<ClassShare>,
}

/// Per-config class counts over label-level counts.
pub fn class_distribution(label_counts: &BTreeMap<ImportanceLabel, usize>, config: &ClassificationConfig) -> ClassDistribution {
    let counts: Vec<usize> =
        config.classes.iter().map(|c| c.iter().map(|l| label_counts.get(l).copied().unwrap_or(0)).sum()).collect();
    let total: usize = counts.iter().sum();
    let classes = config
        .classes
        .iter()
        .zip(counts)
        .map(|(labels, count)| ClassShare {
            labels: labels.clone(),
            count,
            percent: if total == 0 { 0 } else { (100.0 * count as f64 / total as f64).round() as u32 },
        })
        .collect();
    ClassDistribution { config: config.id, total, classes }
}

pub fn label_counts(examples: &[AnnotationExample]) -> BTreeMap<ImportanceLabel, usize> {
    let mut out = BTreeMap::new();
    for e in examples {
        *out.entry(e.label).or_default() += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::small_corpus;
    use ImportanceLabel::*;

    fn votes(labels: &[u8]) -> BTreeMap<String, ImportanceLabel> {
        labels.iter().enumerate().map(|(i, l)| (format!("a{i}"), ImportanceLabel::try_from(*l).unwrap())).collect()
    }

    #[test]
    fn majority_counts() {
        assert_eq!(majority(&votes(&[1, 1, 1])), Some((VeryImportant, 1.0)));
        assert_eq!(majority(&votes(&[1, 1, 2, 3])), Some((VeryImportant, 0.5)));
        assert_eq!(majority(&votes(&[1, 2])), None);
        assert_eq!(majority(&votes(&[])), None);
    }

    #[test]
    fn label_codes() {
        assert_eq!(serde_json::to_string(&NotSure).unwrap(), "5");
        assert_eq!(serde_json::from_str::<ImportanceLabel>("2").unwrap(), KindOfImportant);
        assert!(serde_json::from_str::<ImportanceLabel>("6").is_err());
        assert!(ImportanceLabel::try_from(0).is_err());
    }

    fn example(n: &[u8]) -> AnnotationExample {
        let v = votes(n);
        let (label, agreement_ratio) = majority(&v).unwrap();
        AnnotationExample {
            id: "x".into(),
            event_id: "e".into(),
            cluster_id: "c".into(),
            statement_id: "s".into(),
            context_article_id: "a".into(),
            label,
            votes: v,
            agreement_ratio,
        }
    }

    #[test]
    fn filter_boundaries() {
        let kept = filter_examples(vec![example(&[1, 1, 1, 2])], MIN_ANNOTATORS, MIN_AGREEMENT);
        assert_eq!(kept.len(), 1);
        assert!(filter_examples(vec![example(&[1, 1])], 3, 0.75).is_empty());
        assert!(filter_examples(vec![example(&[1, 2, 3, 1, 1, 1, 2, 3, 4])], 3, 0.75).is_empty());
    }

    #[test]
    fn aggregate_last_vote_wins_and_unknown_cluster() {
        let corpus = small_corpus();
        let c = &corpus.clusters[0];
        let contexts = BTreeMap::from([(c.event_id.clone(), corpus.articles[0].id.clone())]);
        let v = |a: &str, l| Vote { annotator: a.into(), cluster_id: c.id.clone(), label: l };
        let out = aggregate_annotations(
            &[v("a", NotSure), v("b", VeryImportant), v("c", VeryImportant), v("a", VeryImportant)],
            &corpus.clusters,
            &contexts,
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].label, out[0].agreement_ratio, out[0].vote_count()), (VeryImportant, 1.0, 3));
        assert_eq!(out[0].statement_id, c.representative_id);

        let bad = Vote { annotator: "a".into(), cluster_id: "cl-none".into(), label: NotSure };
        assert_eq!(aggregate_annotations(&[bad], &corpus.clusters, &contexts), Err(DatasetError::UnknownCluster("cl-none".into())));
        assert!(matches!(
            aggregate_annotations(&[v("a", NotSure)], &corpus.clusters, &BTreeMap::new()),
            Err(DatasetError::MissingContext(_))
        ));
    }

    #[test]
    fn casting() {
        let corpus = small_corpus();
        let c = &corpus.clusters[0];
        let mut e = example(&[1, 1, 1]);
        e.cluster_id = c.id.clone();
        let cast = cast_labels(&e, c);
        assert_eq!(cast.len(), c.statement_ids.len());
        assert!(cast.iter().all(|x| x.label == VeryImportant && x.context_article_id == e.context_article_id));
        let ids: Vec<&str> = cast.iter().map(|x| x.statement_id.as_str()).collect();
        assert_eq!(ids, c.statement_ids.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn config_table() {
        let c1 = ClassificationConfig::get(1).unwrap();
        assert_eq!(c1.class_of(NotSure), Some(2));
        let c2 = ClassificationConfig::get(2).unwrap();
        assert_eq!(c2.class_of(ExcerptsIncorrect), None);
        for c in ClassificationConfig::all() {
            assert_eq!(c.class_of(VeryImportant), Some(1));
        }
        assert!(ClassificationConfig::get(5).is_err());
    }

    #[test]
    fn ten_equal_events_put_eight_in_train() {
        let ids: Vec<String> = (0..10).flat_map(|e| (0..7).map(move |_| format!("ev{e}"))).collect();
        for seed in 0..20 {
            let s = split_by_events(ids.iter().map(String::as_str), 0.85, seed).unwrap();
            assert_eq!(s.train_events.len(), 8);
            assert_eq!((s.train_examples, s.test_examples), (56, 14));
        }
    }

    #[test]
    fn split_errors_and_sides() {
        assert_eq!(split_by_events(["a", "a"], 0.85, 1), Err(DatasetError::TooFewEvents(1)));
        assert!(matches!(split_by_events(["a", "b"], 1.0, 1), Err(DatasetError::InvalidRatio(_))));
        // One huge event would take everything; both sides stay non-empty.
        let ids: Vec<&str> = std::iter::repeat_n("big", 100).chain(["small"]).collect();
        let s = split_by_events(ids, 0.85, 3).unwrap();
        assert_eq!(s.train_events.len(), 1);
        assert_eq!(s.test_events.len(), 1);
        assert_eq!(s.side(&s.train_events[0]), Some(Side::Train));
        assert_eq!(s.side("missing"), None);
    }

    #[test]
    fn distribution_percentages() {
        let counts = BTreeMap::from([(VeryImportant, 2175), (KindOfImportant, 667), (NotVeryImportant, 504), (ExcerptsIncorrect, 40), (NotSure, 21)]);
        let d = class_distribution(&counts, &ClassificationConfig::get(3).unwrap());
        let got: Vec<(usize, u32)> = d.classes.iter().map(|c| (c.count, c.percent)).collect();
        assert_eq!(got, [(2175, 64), (1171, 34), (61, 2)]);
        assert_eq!(d.total, 3407);
    }
}
