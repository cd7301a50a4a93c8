//! Plain tables for the analysis outputs, rendered as Markdown or JSON.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassDistribution, ImportanceLabel};
use crate::detect::{BandSummary, Correlation, MetricReport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let line = |cells: &[String]| format!("| {} |", cells.join(" | "));
        writeln!(out, "{}", line(&self.headers)).unwrap();
        writeln!(out, "|{}", "---|".repeat(self.headers.len())).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", line(r)).unwrap();
        }
        out
    }

    /// Tab-separated, header first. Stable byte for byte across runs.
    pub fn to_tsv(&self) -> String {
        std::iter::once(&self.headers).chain(&self.rows).map(|r| r.join("\t") + "\n").collect()
    }
}

fn label_set(labels: &[ImportanceLabel]) -> String {
    format!("{{{}}}", labels.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
}

/// Label combinations with counts: two rows per configuration.
pub fn class_distribution_table(dists: &[ClassDistribution]) -> Table {
    let mut t = Table::new(&["Conf.", "Class 1", "Class 2", "Class 3"]);
    for d in dists {
        let mut labels = vec![d.config.to_string()];
        let mut counts = vec![String::new()];
        for i in 0..3 {
            match d.classes.get(i) {
                Some(c) => {
                    labels.push(label_set(&c.labels));
                    counts.push(format!("{} ({}%)", c.count, c.percent));
                }
                None => {
                    labels.push("-".into());
                    counts.push("-".into());
                }
            }
        }
        t.push(labels);
        t.push(counts);
    }
    t
}

/// Accuracy and macro F-1 per classification configuration.
pub fn configuration_table(rows: &[(u8, MetricReport)]) -> Table {
    let mut t = Table::new(&["Conf. #", "Acc.", "F-1"]);
    for (conf, m) in rows {
        t.push(vec![conf.to_string(), format!("{:.3}", m.accuracy), format!("{:.3}", m.macro_f1)]);
    }
    t
}

/// Correlation of outlet scores with each rating source.
pub fn correlation_table(rows: &[(String, Correlation)]) -> Table {
    let mut t = Table::new(&["Bias score source", "r", "P-value"]);
    for (source, c) in rows {
        t.push(vec![source.clone(), format!("{:.2}", c.r), format!("{:.2}", c.p_value)]);
    }
    t
}

pub fn bias_band_table(bands: &[BandSummary]) -> Table {
    let mut t = Table::new(&["Bias category", "Mean", "STD", "Sample size"]);
    for b in bands {
        t.push(vec![
            b.band.label().to_string(),
            format!("{:.2}", b.mean),
            b.std.map_or("-".to_string(), |s| format!("{s:.2}")),
            b.sample_size.to_string(),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub scorer: String,
    pub length: usize,
    pub accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One row per (scorer, context length); failed cells show the error.
pub fn sweep_table(cells: &[SweepCell]) -> Table {
    let mut t = Table::new(&["Scorer", "Context length", "Accuracy", "Macro F-1"]);
    for c in cells {
        let fmt = |v: Option<f64>| v.map_or_else(|| c.error.clone().unwrap_or_else(|| "-".into()), |x| format!("{x:.3}"));
        t.push(vec![c.scorer.clone(), c.length.to_string(), fmt(c.accuracy), fmt(c.macro_f1)]);
    }
    t
}
