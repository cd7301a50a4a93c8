//! Stage names, their ordering and the artifacts each one owns.

use std::fmt;
use std::str::FromStr;

pub const EXAMPLES_FILE: &str = "examples.jsonl";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const SPLIT_FILE: &str = "split.json";
pub const DETECT_FILE: &str = "detect.json";
pub const EVALUATE_FILE: &str = "evaluate.json";
pub const CORRELATE_FILE: &str = "correlate.json";
pub const REPORTS_DIR: &str = "reports";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Segment,
    ClusterEvents,
    ClusterStatements,
    BuildDataset,
    Detect,
    Evaluate,
    Correlate,
    Sweep,
    Stats,
    ServeAnnotator,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::Ingest,
        Stage::Segment,
        Stage::ClusterEvents,
        Stage::ClusterStatements,
        Stage::BuildDataset,
        Stage::Detect,
        Stage::Evaluate,
        Stage::Correlate,
        Stage::Sweep,
        Stage::Stats,
        Stage::ServeAnnotator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Segment => "segment",
            Stage::ClusterEvents => "cluster-events",
            Stage::ClusterStatements => "cluster-statements",
            Stage::BuildDataset => "build-dataset",
            Stage::Detect => "detect",
            Stage::Evaluate => "evaluate",
            Stage::Correlate => "correlate",
            Stage::Sweep => "sweep",
            Stage::Stats => "stats",
            Stage::ServeAnnotator => "serve-annotator",
        }
    }

    /// The stage this one reads from directly.
    pub fn parent(self) -> Option<Stage> {
        match self {
            Stage::Ingest => None,
            Stage::Segment => Some(Stage::Ingest),
            Stage::ClusterEvents => Some(Stage::Segment),
            Stage::ClusterStatements | Stage::Detect => Some(Stage::ClusterEvents),
            Stage::BuildDataset | Stage::ServeAnnotator => Some(Stage::ClusterStatements),
            Stage::Evaluate | Stage::Sweep | Stage::Stats => Some(Stage::BuildDataset),
            Stage::Correlate => Some(Stage::Detect),
        }
    }

    /// Every stage that must have run first, earliest first.
    pub fn ancestors(self) -> Vec<Stage> {
        let mut out = Vec::new();
        let mut cur = self.parent();
        while let Some(s) = cur {
            out.push(s);
            cur = s.parent();
        }
        out.reverse();
        out
    }

    /// Whether the stage is recorded in the manifest when it succeeds.
    pub fn records(self) -> bool {
        !matches!(self, Stage::Stats | Stage::ServeAnnotator)
    }

    /// Stages whose results depend on this one, transitively.
    pub fn downstream(self) -> Vec<Stage> {
        Stage::ALL.into_iter().filter(|s| s.ancestors().contains(&self)).collect()
    }

    /// The file a later stage looks for, named in prerequisite errors.
    pub fn primary_artifact(self) -> &'static str {
        match self {
            Stage::Ingest => "articles.jsonl",
            Stage::Segment => "statements.jsonl",
            Stage::ClusterEvents => "events.jsonl",
            Stage::ClusterStatements => "clusters.jsonl",
            Stage::BuildDataset => DATASET_FILE,
            Stage::Detect => DETECT_FILE,
            Stage::Evaluate => EVALUATE_FILE,
            Stage::Correlate => CORRELATE_FILE,
            Stage::Sweep => "sweep.tsv",
            Stage::Stats | Stage::ServeAnnotator => "",
        }
    }

    /// Files this stage writes outside the corpus record files.
    pub fn side_artifacts(self) -> &'static [&'static str] {
        match self {
            Stage::BuildDataset => &[EXAMPLES_FILE, DATASET_FILE, SPLIT_FILE],
            Stage::Detect => &[DETECT_FILE],
            Stage::Evaluate => &[EVALUATE_FILE],
            Stage::Correlate => &[CORRELATE_FILE],
            Stage::Sweep => &["sweep.tsv", "sweep.md", "sweep.json"],
            _ => &[],
        }
    }

    /// Whether the stage calls an importance scorer.
    pub fn scores(self) -> bool {
        matches!(self, Stage::Detect | Stage::Evaluate | Stage::Sweep)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| format!("unknown stage {s}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ancestors_run_earliest_first() {
        assert_eq!(Stage::ClusterStatements.ancestors(), [Stage::Ingest, Stage::Segment, Stage::ClusterEvents]);
        assert_eq!(Stage::Correlate.ancestors(), [Stage::Ingest, Stage::Segment, Stage::ClusterEvents, Stage::Detect]);
        assert!(Stage::Ingest.ancestors().is_empty());
    }

    #[test]
    fn downstream_of_segment_covers_everything_after_it() {
        let d = Stage::Segment.downstream();
        assert!(!d.contains(&Stage::Ingest) && !d.contains(&Stage::Segment));
        assert_eq!(d.len(), Stage::ALL.len() - 2);
        assert_eq!(Stage::Detect.downstream(), [Stage::Correlate]);
    }

    #[test]
    fn names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>().unwrap(), s);
        }
    }
}
